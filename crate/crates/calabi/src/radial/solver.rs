use nalgebra::{DMatrix, DVector};

use super::{
    series_start, PotentialParams, RadialError, RadialProfile, DEFAULT_HANDOFF, MIN_TAIL_NODES,
};

// Dormand-Prince 5(4). The last row of A equals B5, so the final stage is
// the first stage of the next step (FSAL).
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
// B5 - B4, applied to the stages for the embedded error estimate.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

type State = [f64; 2];

fn rhs(n: u32, r: f64, s: State) -> Result<State, RadialError> {
    let [y, yp] = s;
    if !(yp > 0.0) {
        return Err(RadialError::InternalConsistency {
            r,
            reason: format!("Y' = {yp} is not positive"),
        });
    }
    let dyp = y.exp() * (r / yp).powi(n as i32 - 1);
    if !dyp.is_finite() {
        return Err(RadialError::InternalConsistency {
            r,
            reason: format!("Y'' overflowed (Y = {y}, Y' = {yp})"),
        });
    }
    Ok([yp, dyp])
}

fn add_scaled(s: State, h: f64, ks: &[State], w: &[f64]) -> State {
    let mut out = s;
    for (k, &wk) in ks.iter().zip(w) {
        out[0] += h * wk * k[0];
        out[1] += h * wk * k[1];
    }
    out
}

/// Solves the radial equation outward from the series handoff until `Y'`
/// reaches `blowup_threshold`, then extrapolates the blow-up radius from the
/// tail. Fixed parameters give bit-identical results across runs.
pub fn solve_radial(params: &PotentialParams) -> Result<RadialProfile, RadialError> {
    solve_radial_with_handoff(params, DEFAULT_HANDOFF)
}

pub fn solve_radial_with_handoff(
    params: &PotentialParams,
    r0: f64,
) -> Result<RadialProfile, RadialError> {
    let (y_init, yp_init) = series_start(params, r0)?;
    let n = params.n;
    let threshold = params.blowup_threshold;

    let mut r = r0;
    let mut s: State = [y_init, yp_init];
    let mut nodes: Vec<(f64, f64, f64)> = vec![(r, s[0], s[1])];
    let mut k1 = rhs(n, r, s)?;
    let mut h = 1e-3_f64;
    let mut last_rejected = false;
    let mut steps = 0usize;

    while s[1] < threshold {
        steps += 1;
        if steps > params.max_steps {
            return Err(RadialError::IncompleteProfile {
                steps: steps - 1,
                r,
                yp: s[1],
            });
        }
        if h < 1e-14 * r.max(1.0) {
            return Err(RadialError::IncompleteProfile {
                steps,
                r,
                yp: s[1],
            });
        }

        let k2 = rhs(n, r + C[1] * h, add_scaled(s, h, &[k1], &A2))?;
        let k3 = rhs(n, r + C[2] * h, add_scaled(s, h, &[k1, k2], &A3))?;
        let k4 = rhs(n, r + C[3] * h, add_scaled(s, h, &[k1, k2, k3], &A4))?;
        let k5 = rhs(n, r + C[4] * h, add_scaled(s, h, &[k1, k2, k3, k4], &A5))?;
        let k6 = rhs(
            n,
            r + C[5] * h,
            add_scaled(s, h, &[k1, k2, k3, k4, k5], &A6),
        )?;
        let stages6 = [k1, k2, k3, k4, k5, k6];
        let s_new = add_scaled(s, h, &stages6, &B5[..6]);
        let r_new = r + h;
        let k7 = rhs(n, r_new, s_new)?;
        let stages = [k1, k2, k3, k4, k5, k6, k7];

        let mut err_sq = 0.0;
        for i in 0..2 {
            let e_i: f64 = stages.iter().zip(&E).map(|(k, &e)| e * k[i]).sum();
            let sc = params.abs_tol + params.rel_tol * s[i].abs().max(s_new[i].abs());
            let q = h * e_i / sc;
            err_sq += q * q;
        }
        let err = (0.5 * err_sq).sqrt();

        if err <= 1.0 {
            r = r_new;
            s = s_new;
            k1 = k7;
            nodes.push((r, s[0], s[1]));
            let grow_cap = if last_rejected { 1.0 } else { 5.0 };
            h *= (0.9 * err.powf(-0.2)).clamp(0.2, grow_cap);
            last_rejected = false;
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0).min(0.9);
            last_rejected = true;
        }
    }

    let (a_est, a_err) = fit_blowup_radius(params, &nodes)?;
    RadialProfile::from_nodes(params.clone(), &nodes, a_est, a_err)
}

/// Re-estimates `(a_est, a_err)` from a profile's tail.
pub fn estimate_radius(profile: &RadialProfile) -> Result<(f64, f64), RadialError> {
    let nodes: Vec<(f64, f64, f64)> = profile
        .grid()
        .iter()
        .zip(profile.y_nodes().iter().zip(profile.yp_nodes().iter()))
        .map(|(&r, (&y, &yp))| (r, y, yp))
        .collect();
    fit_blowup_radius(profile.params(), &nodes)
}

/// Fits `Y'(r) ~ C / (a - r)` on tail windows, as a quadratic in `1/Y'`
/// whose positive root past `r_max` is `a`. The estimate comes from the
/// widest window; the spread across windows (with a safety factor) is
/// `a_err`. If the model is rejected, falls back to the asymptotic bracket
/// `[r_max, r_max + 2(n+1)/Y'_max]`.
fn fit_blowup_radius(
    params: &PotentialParams,
    nodes: &[(f64, f64, f64)],
) -> Result<(f64, f64), RadialError> {
    let threshold = params.blowup_threshold;
    let yp_last = nodes[nodes.len() - 1].2;
    let r_max = nodes[nodes.len() - 1].0;
    if yp_last < threshold {
        return Err(RadialError::InsufficientTail {
            usable: 0,
            min: MIN_TAIL_NODES,
        });
    }
    // Asymptotic regime: the last ~1.5 decades of Y'.
    let first = nodes.partition_point(|&(_, _, yp)| yp < threshold / 30.0);
    let usable = nodes.len() - first;
    if usable < MIN_TAIL_NODES {
        return Err(RadialError::InsufficientTail {
            usable,
            min: MIN_TAIL_NODES,
        });
    }
    let tail_r: Vec<f64> = nodes[first..].iter().map(|n| n.0).collect();
    let tail_w: Vec<f64> = nodes[first..].iter().map(|n| 1.0 / n.2).collect();

    let mut estimates: Vec<f64> = Vec::new();
    let mut windows: Vec<usize> = [1.0, 0.75, 0.5, 0.375, 0.25]
        .iter()
        .map(|f| ((usable as f64 * f).round() as usize).max(MIN_TAIL_NODES))
        .collect();
    windows.dedup();
    for w in windows {
        if let Some(a_w) = fit_window(&tail_r[usable - w..], &tail_w[usable - w..], r_max) {
            estimates.push(a_w);
        }
    }

    if estimates.is_empty() {
        // Bracket from the leading asymptotic alone.
        let gap = (f64::from(params.n) + 1.0) / yp_last;
        return Ok((r_max + gap, 2.0 * gap));
    }
    let a_est = estimates[0];
    let spread = estimates.iter().fold(f64::MIN, |m, &v| m.max(v))
        - estimates.iter().fold(f64::MAX, |m, &v| m.min(v));
    let a_err = 2.0 * spread + 8.0 * f64::EPSILON * a_est;
    Ok((a_est, a_err))
}

/// Least-squares quadratic `1/Y' = alpha + beta t + gamma t^2` in
/// `t = r - r_max`; returns the fitted blow-up radius if the window passes
/// the model checks.
fn fit_window(rs: &[f64], ws: &[f64], r_max: f64) -> Option<f64> {
    let m = rs.len();
    let t_scale = (rs[0] - r_max).abs().max(f64::MIN_POSITIVE);
    let design = DMatrix::from_fn(m, 3, |i, j| {
        let t = (rs[i] - r_max) / t_scale;
        match j {
            0 => 1.0,
            1 => t,
            _ => t * t,
        }
    });
    let rhs = DVector::from_row_slice(ws);
    let coef = design.clone().svd(true, true).solve(&rhs, 1e-300).ok()?;

    // Model check: the quadratic must actually describe the tail.
    let fitted = design * &coef;
    let w_span = ws.iter().cloned().fold(f64::MIN, f64::max)
        - ws.iter().cloned().fold(f64::MAX, f64::min);
    let max_dev = (&fitted - &rhs).abs().max();
    if !(max_dev <= 1e-3 * w_span + 1e-14 * ws[0].abs()) {
        return None;
    }

    let (alpha, beta, gamma) = (coef[0], coef[1], coef[2]);
    // Smallest positive root of alpha + beta t + gamma t^2 in scaled t.
    let root = if gamma.abs() < 1e-12 * beta.abs() {
        let t = -alpha / beta;
        (t > 0.0).then_some(t)
    } else {
        let disc = beta * beta - 4.0 * alpha * gamma;
        if disc < 0.0 {
            None
        } else {
            let sq = disc.sqrt();
            let t1 = (-beta + sq) / (2.0 * gamma);
            let t2 = (-beta - sq) / (2.0 * gamma);
            [t1, t2]
                .into_iter()
                .filter(|&t| t > 0.0)
                .min_by(|a, b| a.partial_cmp(b).expect("finite roots"))
        }
    }?;
    let a_w = r_max + root * t_scale;
    (a_w.is_finite() && a_w > r_max && a_w - r_max < 1.0f64.max(r_max)).then_some(a_w)
}
