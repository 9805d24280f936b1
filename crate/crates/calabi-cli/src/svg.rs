//! Minimal self-contained SVG line and bar plots. Data polylines are written
//! in data coordinates inside a group whose transform maps the data window
//! onto the viewport, so the numbers stored in the file are exactly the
//! numbers that were computed; `vector-effect` keeps strokes unscaled.
//! Output is a pure function of the inputs, which makes plot files
//! byte-comparable across runs.

pub const PANEL_W: f64 = 640.0;
pub const PANEL_H: f64 = 420.0;

const MARGIN_L: f64 = 72.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 56.0;
const TICKS: usize = 5;

pub struct Series {
    pub label: String,
    pub color: &'static str,
    pub points: Vec<(f64, f64)>,
}

pub struct Bars {
    pub lo: f64,
    pub bin_width: f64,
    pub counts: Vec<u64>,
    pub color: &'static str,
}

pub struct VLine {
    pub x: f64,
    pub label: String,
}

pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub bars: Option<Bars>,
    pub vlines: Vec<VLine>,
    /// Overrides the data-derived window.
    pub x_range: Option<(f64, f64)>,
    pub y_range: Option<(f64, f64)>,
}

pub fn document(panels: &[Panel]) -> String {
    let h = PANEL_H * panels.len() as f64;
    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{PANEL_W:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {PANEL_W:.0} {h:.0}\">\n"
    ));
    s.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{PANEL_W:.0}\" height=\"{h:.0}\" fill=\"white\"/>\n"
    ));
    for (i, p) in panels.iter().enumerate() {
        render_panel(&mut s, p, i as f64 * PANEL_H);
    }
    s.push_str("</svg>\n");
    s
}

fn esc(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Tick label: plain decimal in a moderate range, scientific outside it.
fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if v.abs() >= 1e-3 && v.abs() < 1e5 {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    } else {
        format!("{v:.2e}")
    }
}

fn window(panel: &Panel) -> ((f64, f64), (f64, f64)) {
    let mut x0 = f64::INFINITY;
    let mut x1 = f64::NEG_INFINITY;
    let mut y0 = f64::INFINITY;
    let mut y1 = f64::NEG_INFINITY;
    for s in &panel.series {
        for &(x, y) in &s.points {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
    }
    if let Some(b) = &panel.bars {
        x0 = x0.min(b.lo);
        x1 = x1.max(b.lo + b.bin_width * b.counts.len() as f64);
        y0 = y0.min(0.0);
        y1 = y1.max(b.counts.iter().copied().max().unwrap_or(0) as f64);
    }
    if !(x0 < x1) {
        let c = if x0.is_finite() { x0 } else { 0.0 };
        x0 = c - 1.0;
        x1 = c + 1.0;
    }
    if !(y0 < y1) {
        let c = if y0.is_finite() { y0 } else { 0.0 };
        y0 = c - 1.0;
        y1 = c + 1.0;
    }
    let pad = 0.05 * (y1 - y0);
    let (x0, x1) = panel.x_range.unwrap_or((x0, x1));
    let (y0, y1) = panel.y_range.unwrap_or((y0 - pad, y1 + pad));
    ((x0, x1), (y0, y1))
}

fn render_panel(out: &mut String, panel: &Panel, offset: f64) {
    let fx = MARGIN_L;
    let fy = offset + MARGIN_T;
    let fw = PANEL_W - MARGIN_L - MARGIN_R;
    let fh = PANEL_H - MARGIN_T - MARGIN_B;
    let ((x0, x1), (y0, y1)) = window(panel);
    let sx = fw / (x1 - x0);
    let sy = fh / (y1 - y0);
    let map_x = |x: f64| fx + (x - x0) * sx;

    out.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"14\">{}</text>\n",
        fx + fw / 2.0,
        fy - 16.0,
        esc(&panel.title)
    ));

    // Clipped data group: polylines and bars carry raw data coordinates.
    let clip_id = format!("clip{:.0}", offset);
    out.push_str(&format!(
        "<clipPath id=\"{clip_id}\"><rect x=\"{fx:.2}\" y=\"{fy:.2}\" width=\"{fw:.2}\" height=\"{fh:.2}\"/></clipPath>\n"
    ));
    out.push_str(&format!(
        "<g clip-path=\"url(#{clip_id})\" transform=\"translate({},{}) scale({},{}) translate({},{})\">\n",
        fx,
        fy + fh,
        sx,
        -sy,
        -x0,
        -y0
    ));
    if let Some(b) = &panel.bars {
        for (i, &c) in b.counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let x = b.lo + i as f64 * b.bin_width;
            out.push_str(&format!(
                "<rect class=\"bar\" x=\"{x}\" y=\"0\" width=\"{}\" height=\"{c}\" fill=\"{}\" fill-opacity=\"0.75\"/>\n",
                b.bin_width, b.color
            ));
        }
    }
    for s in &panel.series {
        let pts: Vec<String> = s.points.iter().map(|(x, y)| format!("{x},{y}")).collect();
        out.push_str(&format!(
            "<polyline class=\"data\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" vector-effect=\"non-scaling-stroke\" points=\"{}\"/>\n",
            s.color,
            pts.join(" ")
        ));
    }
    out.push_str("</g>\n");

    // Frame and ticks live in viewport coordinates.
    out.push_str(&format!(
        "<rect x=\"{fx:.2}\" y=\"{fy:.2}\" width=\"{fw:.2}\" height=\"{fh:.2}\" fill=\"none\" stroke=\"#333333\"/>\n"
    ));
    for i in 0..TICKS {
        let t = i as f64 / (TICKS - 1) as f64;
        let xv = x0 + t * (x1 - x0);
        let px = fx + t * fw;
        out.push_str(&format!(
            "<line x1=\"{px:.2}\" y1=\"{:.2}\" x2=\"{px:.2}\" y2=\"{:.2}\" stroke=\"#333333\"/>\n",
            fy + fh,
            fy + fh + 5.0
        ));
        out.push_str(&format!(
            "<text x=\"{px:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"11\">{}</text>\n",
            fy + fh + 18.0,
            fmt_tick(xv)
        ));
        let yv = y0 + t * (y1 - y0);
        let py = fy + fh - t * fh;
        out.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{py:.2}\" x2=\"{fx:.2}\" y2=\"{py:.2}\" stroke=\"#333333\"/>\n",
            fx - 5.0
        ));
        out.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"11\">{}</text>\n",
            fx - 8.0,
            py + 4.0,
            fmt_tick(yv)
        ));
    }
    out.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"12\">{}</text>\n",
        fx + fw / 2.0,
        fy + fh + 38.0,
        esc(&panel.x_label)
    ));
    out.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"12\" transform=\"rotate(-90 {:.2} {:.2})\">{}</text>\n",
        fx - 52.0,
        fy + fh / 2.0,
        fx - 52.0,
        fy + fh / 2.0,
        esc(&panel.y_label)
    ));

    for v in &panel.vlines {
        let px = map_x(v.x);
        out.push_str(&format!(
            "<line class=\"marker\" x1=\"{px:.2}\" y1=\"{fy:.2}\" x2=\"{px:.2}\" y2=\"{:.2}\" stroke=\"#b04848\" stroke-dasharray=\"5,4\"/>\n",
            fy + fh
        ));
        out.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"11\" fill=\"#b04848\">{}</text>\n",
            px + 4.0,
            fy + 12.0,
            esc(&v.label)
        ));
    }

    let labelled: Vec<&Series> = panel.series.iter().filter(|s| !s.label.is_empty()).collect();
    for (i, s) in labelled.iter().enumerate() {
        let ly = fy + 14.0 + 16.0 * i as f64;
        let lx = fx + fw - 130.0;
        out.push_str(&format!(
            "<line x1=\"{lx:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"{}\" stroke-width=\"1.5\"/>\n",
            ly - 4.0,
            lx + 22.0,
            ly - 4.0,
            s.color
        ));
        out.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{ly:.2}\" font-family=\"monospace\" font-size=\"11\">{}</text>\n",
            lx + 28.0,
            esc(&s.label)
        ));
    }
}
