//! One function per subcommand. Every command prints the effective
//! configuration it ran with before doing any work, so logs identify the run
//! even when flags came from a config file.

use std::path::Path;

use calabi::geometry::synthetic::FlatPotential;
use calabi::geometry::{
    curvature_scan, sectional_curvature, CurvatureScan, GeometryError, HistogramConfig,
    ScanConfig, DEFAULT_CURVATURE_STEP,
};
use calabi::radial::{
    solve_radial, PotentialParams, RadialPotential, RadialProfile, DEFAULT_ABS_TOL,
    DEFAULT_BLOWUP_THRESHOLD, DEFAULT_MAX_STEPS, DEFAULT_REL_TOL,
};
use calabi::symplectic::{self, ImagePoint, MapError, TubePoint};
use calabi::verify::{verify_profile, CheckOp, ToleranceOverrides, VerifyConfig};
use calabi::{tolerances, RadialError};
use nalgebra::DVector;

use crate::batch::{self, Row, STATUS_OK};
use crate::config::{pick, FileConfig};
use crate::svg::{self, Bars, Panel, Series, VLine};
use crate::{
    CliError, CurvatureArgs, MapArgs, PlotArgs, RescaleArgs, SolveArgs, SyntheticKind, VerifyArgs,
};

fn load_profile(path: &Path) -> Result<RadialProfile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read profile {}: {e}", path.display())))?;
    RadialProfile::from_json(&text).map_err(CliError::from)
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::Io(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    std::fs::write(path, text)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

pub fn solve(args: &SolveArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.config.as_deref())?;
    let params = PotentialParams {
        n: pick(args.n, file.n, 2),
        y0: pick(args.y0, file.y0, 0.0),
        rel_tol: pick(args.rel_tol, file.rel_tol, DEFAULT_REL_TOL),
        abs_tol: pick(args.abs_tol, file.abs_tol, DEFAULT_ABS_TOL),
        blowup_threshold: pick(args.threshold, file.threshold, DEFAULT_BLOWUP_THRESHOLD),
        max_steps: pick(args.max_steps, file.max_steps, DEFAULT_MAX_STEPS),
        experimental: args.experimental || file.experimental.unwrap_or(false),
    };
    println!(
        "config: n={} y0={} rel_tol={:e} abs_tol={:e} threshold={:e} max_steps={} experimental={}",
        params.n,
        params.y0,
        params.rel_tol,
        params.abs_tol,
        params.blowup_threshold,
        params.max_steps,
        params.experimental
    );
    if params.n == 1 && !params.experimental {
        return Err(CliError::Validation(
            "n must be >= 2 (see --experimental)".into(),
        ));
    }
    let profile = solve_radial(&params)?;
    write_text(&args.out, &profile.to_json())?;
    let mut worst: f64 = 0.0;
    for iv in profile.intervals() {
        worst = worst.max(profile.ode_residual(0.5 * (iv.r_lo + iv.r_hi))?);
    }
    println!(
        "a_est = {:.12} +/- {:.3e}",
        profile.a_est(),
        profile.a_err()
    );
    println!(
        "grid: {} nodes on [0, {:.6}]",
        profile.grid().len(),
        profile.r_max()
    );
    println!(
        "max interpolant residual {:.3e} (gate {:e})",
        worst,
        tolerances::ODE_RESIDUAL
    );
    println!("wrote {}", args.out.display());
    Ok(())
}

pub fn verify(args: &VerifyArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.config.as_deref())?;
    let mut config = VerifyConfig::default();
    config.seed = pick(args.seed, file.seed, config.seed);
    if let Some(s) = args.samples.or(file.samples) {
        if s == 0 {
            return Err(CliError::Validation("samples must be positive".into()));
        }
        config.ode_samples = s;
        config.monge_ampere_samples = s;
        config.positivity_samples = s;
        config.pullback_samples = s;
        config.roundtrip_samples = s;
    }
    config.tolerance_overrides = ToleranceOverrides {
        ode_residual: args.tol_ode,
        monge_ampere: args.tol_monge_ampere,
        pullback_analytic: args.tol_pullback_analytic,
        pullback_fd: args.tol_pullback_fd,
        roundtrip: args.tol_roundtrip,
    };
    println!(
        "config: profile={} seed={} samples={}/{}/{}/{}/{} einstein={}x{:e}",
        args.profile.display(),
        config.seed,
        config.ode_samples,
        config.monge_ampere_samples,
        config.positivity_samples,
        config.pullback_samples,
        config.roundtrip_samples,
        config.einstein_points,
        config.einstein_step
    );
    let profile = load_profile(&args.profile)?;
    let report = verify_profile(&profile, &config)?;
    write_text(&args.out, &report.to_json().map_err(CliError::from)?)?;
    println!("fingerprint: {}", report.profile_fingerprint);
    for c in &report.checks {
        let op = match c.op {
            CheckOp::Le => "<=",
            CheckOp::Gt => "> ",
        };
        println!(
            "{:32} {:>13.6e} {op} {:>10.1e}  {}",
            c.name,
            c.value,
            c.tolerance,
            if c.pass { "pass" } else { "FAIL" }
        );
    }
    println!("overall: {}", if report.pass { "pass" } else { "FAIL" });
    println!("wrote {}", args.out.display());
    if !report.pass {
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name.as_str())
            .collect();
        return Err(CliError::Numerical(format!(
            "verification failed: {}",
            failed.join(", ")
        )));
    }
    Ok(())
}

fn row_status(e: &MapError) -> &'static str {
    match e {
        MapError::ImageBeyondProfile { .. } => "out_of_domain",
        MapError::InverseDiverged { .. } => "diverged",
        MapError::Geometry(GeometryError::OutsideComputedDomain { .. })
        | MapError::Geometry(GeometryError::OutsideManifold { .. })
        | MapError::Radial(RadialError::OutOfRange { .. }) => "out_of_domain",
        _ => "error",
    }
}

fn map_row(profile: &RadialProfile, row: &Row, inverse: bool, ok: &mut usize) -> Row {
    if row.status != STATUS_OK {
        return Row {
            line: row.line,
            a: Vec::new(),
            y: Vec::new(),
            status: row.status.clone(),
        };
    }
    if row.a.iter().chain(row.y.iter()).any(|v| !v.is_finite()) {
        return Row {
            line: row.line,
            a: Vec::new(),
            y: Vec::new(),
            status: "nonfinite_input".into(),
        };
    }
    let a = DVector::from_column_slice(&row.a);
    let y = DVector::from_column_slice(&row.y);
    let mapped = if inverse {
        symplectic::phi_inverse(profile, &ImagePoint::new(a, y)).map(|z| (z.x, z.y))
    } else {
        symplectic::phi(profile, &TubePoint::new(a, y)).map(|w| (w.u, w.v))
    };
    match mapped {
        Ok((a2, y2)) => {
            *ok += 1;
            Row {
                line: row.line,
                a: a2.iter().copied().collect(),
                y: y2.iter().copied().collect(),
                status: STATUS_OK.into(),
            }
        }
        Err(e) => Row {
            line: row.line,
            a: Vec::new(),
            y: Vec::new(),
            status: row_status(&e).into(),
        },
    }
}

pub fn map_batch(args: &MapArgs, inverse: bool) -> Result<(), CliError> {
    FileConfig::load(args.config.as_deref())?;
    let profile = load_profile(&args.profile)?;
    let n = profile.params().n as usize;
    let (in_prefix, out_prefix) = if inverse { ("p", "x") } else { ("x", "p") };
    println!(
        "config: profile={} input={} out={} n={n} direction={}",
        args.profile.display(),
        args.input.display(),
        args.out.display(),
        if inverse { "inverse" } else { "forward" }
    );
    let input = batch::read(&args.input, in_prefix, n)?;
    let mut ok = 0usize;
    let rows: Vec<Row> = input
        .rows
        .iter()
        .map(|row| map_row(&profile, row, inverse, &mut ok))
        .collect();
    batch::write(&args.out, out_prefix, n, &rows)?;
    println!("mapped {} rows, {} ok", rows.len(), ok);
    Ok(())
}

pub fn curvature(args: &CurvatureArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.config.as_deref())?;
    match args.synthetic {
        Some(SyntheticKind::Flat) => {
            if args.n == 0 {
                return Err(CliError::Validation("n must be at least 1".into()));
            }
            if !(args.alpha > 0.0 && args.alpha.is_finite()) {
                return Err(CliError::Validation(format!(
                    "alpha = {} must be positive and finite",
                    args.alpha
                )));
            }
            if !(args.r_max > 0.0 && args.r_max.is_finite()) {
                return Err(CliError::Validation(format!(
                    "r_max = {} must be positive and finite",
                    args.r_max
                )));
            }
            let pot = FlatPotential::new(args.n, args.alpha, args.r_max);
            let what = format!("flat synthetic (n={} alpha={})", args.n, args.alpha);
            scan_potential(&pot, &what, args, &file)
        }
        None => {
            let path = args
                .profile
                .as_ref()
                .expect("clap requires --profile without --synthetic");
            let profile = load_profile(path)?;
            let what = format!("profile {}", path.display());
            scan_potential(&profile, &what, args, &file)
        }
    }
}

fn scan_potential<P: RadialPotential>(
    pot: &P,
    what: &str,
    args: &CurvatureArgs,
    file: &FileConfig,
) -> Result<(), CliError> {
    let defaults = HistogramConfig::default();
    let config = ScanConfig {
        seed: pick(args.seed, file.seed, 7),
        samples: pick(args.samples, file.samples, 200),
        radius: pick(args.radius, file.radius, 0.5 * pot.r_max()),
        step: pick(args.step, file.step, DEFAULT_CURVATURE_STEP),
        histogram: HistogramConfig {
            bins: pick(args.bins, file.bins, defaults.bins),
            lo: pick(args.k_lo, file.k_lo, defaults.lo),
            hi: pick(args.k_hi, file.k_hi, defaults.hi),
        },
    };
    println!(
        "config: {what} seed={} samples={} radius={:.6} step={:e} bins={} range=[{},{}]",
        config.seed,
        config.samples,
        config.radius,
        config.step,
        config.histogram.bins,
        config.histogram.lo,
        config.histogram.hi
    );
    let scan = curvature_scan(pot, &config)?;
    let mut json = serde_json::to_string_pretty(&scan)
        .map_err(|e| CliError::Io(format!("cannot serialize scan: {e}")))?;
    json.push('\n');
    write_text(&args.out, &json)?;
    println!(
        "K: min {:.6} max {:.6} mean {:.6} over {} planes ({} below range, {} above)",
        scan.summary.min,
        scan.summary.max,
        scan.summary.mean,
        scan.summary.count,
        scan.histogram.underflow,
        scan.histogram.overflow
    );
    let svg_text = curvature_svg(pot, &scan, &config)?;
    write_text(&args.svg, &svg_text)?;
    println!("wrote {} and {}", args.out.display(), args.svg.display());
    Ok(())
}

/// Histogram of the sampled K values plus K(r) along coordinate planes over
/// the first axis: radial-radial, radial-fiber, and mixed.
fn curvature_svg<P: RadialPotential>(
    pot: &P,
    scan: &CurvatureScan,
    config: &ScanConfig,
) -> Result<String, CliError> {
    let hist = &scan.histogram;
    let mut title = format!("sectional curvature, {} planes", scan.summary.count);
    if hist.underflow > 0 || hist.overflow > 0 {
        title.push_str(&format!(
            " ({} below range, {} above)",
            hist.underflow, hist.overflow
        ));
    }
    let hist_panel = Panel {
        title,
        x_label: "K".into(),
        y_label: "count".into(),
        series: Vec::new(),
        bars: Some(Bars {
            lo: hist.lo,
            bin_width: (hist.hi - hist.lo) / hist.counts.len() as f64,
            counts: hist.counts.clone(),
            color: "#4878b0",
        }),
        vlines: Vec::new(),
        x_range: Some((hist.lo, hist.hi)),
        y_range: None,
    };

    let n = pot.dim() as usize;
    let mut families: Vec<(&str, &'static str, usize, usize)> = Vec::new();
    if n >= 2 {
        families.push(("(x1,x2)", "#b04848", 0, 1));
        families.push(("(x1,y2)", "#48a048", 0, n + 1));
    }
    families.push(("(x1,y1)", "#4878b0", 0, n));
    let count = 64;
    let mut series = Vec::new();
    for (label, color, iu, iv) in families {
        let mut points = Vec::with_capacity(count);
        for j in 0..count {
            let r = (j as f64 + 1.0) / count as f64 * config.radius;
            let mut p = DVector::zeros(2 * n);
            p[0] = r;
            let mut u = DVector::zeros(2 * n);
            u[iu] = 1.0;
            let mut v = DVector::zeros(2 * n);
            v[iv] = 1.0;
            let k = sectional_curvature(pot, &p, &u, &v, config.step)?;
            points.push((r, k));
        }
        series.push(Series {
            label: label.into(),
            color,
            points,
        });
    }
    let radial_panel = Panel {
        title: "K along the first axis".into(),
        x_label: "r".into(),
        y_label: "K".into(),
        series,
        bars: None,
        vlines: Vec::new(),
        x_range: None,
        y_range: None,
    };
    Ok(svg::document(&[hist_panel, radial_panel]))
}

pub fn plot(args: &PlotArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.config.as_deref())?;
    let samples = pick(args.samples, file.samples, 400);
    if samples < 2 {
        return Err(CliError::Validation("samples must be at least 2".into()));
    }
    let profile = load_profile(&args.profile)?;
    println!(
        "config: profile={} out_dir={} samples={samples}",
        args.profile.display(),
        args.out_dir.display()
    );
    let r_max = profile.r_max();
    let a = profile.a_est();
    let mut pot_pts = Vec::with_capacity(samples);
    let mut grad_pts = Vec::with_capacity(samples);
    for i in 0..samples {
        let r = i as f64 / (samples - 1) as f64 * r_max;
        let (yv, yp, _) = profile.eval(r)?;
        pot_pts.push((r, yv));
        grad_pts.push((r, yp));
    }
    // The gradient norm spans several decades, so properness is plotted in
    // log10; r = 0 is excluded (Y'(0) = 0).
    let mut prop_pts = Vec::with_capacity(samples);
    for i in 0..samples {
        let r = (i as f64 + 1.0) / samples as f64 * r_max;
        let (_, yp, _) = profile.eval(r)?;
        prop_pts.push((r, yp.log10()));
    }

    let potential = svg::document(&[Panel {
        title: "potential Y(r)".into(),
        x_label: "r".into(),
        y_label: "Y".into(),
        series: vec![Series {
            label: String::new(),
            color: "#4878b0",
            points: pot_pts,
        }],
        bars: None,
        vlines: Vec::new(),
        x_range: None,
        y_range: None,
    }]);
    let gradient = svg::document(&[Panel {
        title: "gradient Y'(r), blow-up at a_est".into(),
        x_label: "r".into(),
        y_label: "Y'".into(),
        series: vec![Series {
            label: String::new(),
            color: "#4878b0",
            points: grad_pts,
        }],
        bars: None,
        vlines: vec![VLine {
            x: a,
            label: "a_est".into(),
        }],
        x_range: Some((0.0, a * 1.02)),
        y_range: None,
    }]);
    let properness = svg::document(&[Panel {
        title: "gradient growth".into(),
        x_label: "r".into(),
        y_label: "log10 |grad f|".into(),
        series: vec![Series {
            label: String::new(),
            color: "#4878b0",
            points: prop_pts,
        }],
        bars: None,
        vlines: Vec::new(),
        x_range: None,
        y_range: None,
    }]);

    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", args.out_dir.display())))?;
    let paths = [
        (args.out_dir.join("potential.svg"), potential),
        (args.out_dir.join("gradient.svg"), gradient),
        (args.out_dir.join("properness.svg"), properness),
    ];
    for (path, text) in &paths {
        write_text(path, text)?;
    }
    println!(
        "wrote {}, {}, {}",
        paths[0].0.display(),
        paths[1].0.display(),
        paths[2].0.display()
    );
    Ok(())
}

pub fn rescale(args: &RescaleArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.config.as_deref())?;
    let Some(lambda) = args.lambda.or(file.lambda) else {
        return Err(CliError::Validation(
            "missing --lambda (or lambda in the config file)".into(),
        ));
    };
    println!(
        "config: profile={} lambda={lambda} out={}",
        args.profile.display(),
        args.out.display()
    );
    let profile = load_profile(&args.profile)?;
    let scaled = profile.rescale(lambda)?;
    write_text(&args.out, &scaled.to_json())?;
    println!("y0: {} -> {}", profile.params().y0, scaled.params().y0);
    println!("a_est = {:.12} +/- {:.3e}", scaled.a_est(), scaled.a_err());
    println!("wrote {}", args.out.display());
    Ok(())
}
