use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{
    ypp_identity, yppp_identity, PotentialParams, RadialError, RadialPotential, SeriesStart,
};

pub const PROFILE_FORMAT_VERSION: u32 = 1;

/// Quintic polynomial in the local variable `t = (r - r_lo) / (r_hi - r_lo)`,
/// monomial coefficients low to high.
fn quintic_from_endpoints(f0: f64, f1: f64, d0: f64, d1: f64, s0: f64, s1: f64, h: f64) -> [f64; 6] {
    let m0 = d0 * h;
    let m1 = d1 * h;
    let q0 = s0 * h * h;
    let q1 = s1 * h * h;
    let a = f1 - f0 - m0 - 0.5 * q0;
    let b = m1 - m0 - q0;
    let c = q1 - q0;
    [
        f0,
        m0,
        0.5 * q0,
        10.0 * a - 4.0 * b + 0.5 * c,
        -15.0 * a + 7.0 * b - c,
        6.0 * a - 3.0 * b + 0.5 * c,
    ]
}

fn poly_val(c: &[f64; 6], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ck| acc * t + ck)
}

fn poly_deriv(c: &[f64; 6], t: f64) -> f64 {
    (1..6)
        .rev()
        .fold(0.0, |acc, k| acc * t + k as f64 * c[k])
}

/// Dense-output segment between two consecutive grid nodes. `y` interpolates
/// (Y, Y', Y'') at both endpoints, `yp` interpolates (Y', Y'', Y''').
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteInterval {
    pub r_lo: f64,
    pub r_hi: f64,
    pub y: [f64; 6],
    pub yp: [f64; 6],
}

impl HermiteInterval {
    fn from_node_states(n: u32, r_lo: f64, r_hi: f64, lo: (f64, f64), hi: (f64, f64)) -> Self {
        let h = r_hi - r_lo;
        let (y0, yp0) = lo;
        let (y1, yp1) = hi;
        let ypp0 = ypp_identity(n, r_lo, y0, yp0);
        let ypp1 = ypp_identity(n, r_hi, y1, yp1);
        let yppp0 = yppp_identity(n, r_lo, yp0, ypp0);
        let yppp1 = yppp_identity(n, r_hi, yp1, ypp1);
        HermiteInterval {
            r_lo,
            r_hi,
            y: quintic_from_endpoints(y0, y1, yp0, yp1, ypp0, ypp1, h),
            yp: quintic_from_endpoints(yp0, yp1, ypp0, ypp1, yppp0, yppp1, h),
        }
    }

    fn local(&self, r: f64) -> (f64, f64) {
        let h = self.r_hi - self.r_lo;
        ((r - self.r_lo) / h, h)
    }

    pub fn eval_y(&self, r: f64) -> f64 {
        poly_val(&self.y, self.local(r).0)
    }

    pub fn eval_yp(&self, r: f64) -> f64 {
        poly_val(&self.yp, self.local(r).0)
    }

    /// `Y''` as the derivative of the `Y'` interpolant, independent of the
    /// equation identity.
    pub fn eval_ypp_from_interpolant(&self, r: f64) -> f64 {
        let (t, h) = self.local(r);
        poly_deriv(&self.yp, t) / h
    }
}

/// A solved radial profile: strictly increasing grid, node states, dense
/// interpolant, and the blow-up radius estimate.
///
/// Invariants, enforced at construction and on load: the grid starts at the
/// series handoff radius and increases strictly; `Y` and `Y'` increase
/// strictly along it with `Y' > 0`; `r_max < a_est`; `a_err >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    params: PotentialParams,
    series: SeriesStart,
    grid: Vec<f64>,
    y: Vec<f64>,
    yp: Vec<f64>,
    intervals: Vec<HermiteInterval>,
    a_est: f64,
    a_err: f64,
    fingerprint: String,
}

#[derive(Serialize, Deserialize)]
struct ProfileFile {
    format_version: u32,
    params: PotentialParams,
    grid: Vec<f64>,
    #[serde(rename = "Y")]
    y: Vec<f64>,
    #[serde(rename = "Yp")]
    yp: Vec<f64>,
    /// Per-interval dense-output coefficients: six for Y, six for Y', in the
    /// local variable of the interval. Derived from the node states; loaders
    /// rebuild them rather than trusting the file.
    interpolant_coeffs: Vec<Vec<f64>>,
    a_est: f64,
    a_err: f64,
    solver_fingerprint: String,
}

pub(crate) fn solver_fingerprint(params: &PotentialParams) -> String {
    let mut h = Sha256::new();
    h.update(b"calabi radial dopri5(4)+hermite5 v1");
    h.update(params.n.to_le_bytes());
    h.update(params.y0.to_bits().to_le_bytes());
    h.update(params.rel_tol.to_bits().to_le_bytes());
    h.update(params.abs_tol.to_bits().to_le_bytes());
    h.update(params.blowup_threshold.to_bits().to_le_bytes());
    h.update((params.max_steps as u64).to_le_bytes());
    h.update([u8::from(params.experimental)]);
    let digest = h.finalize();
    digest[..16].iter().map(|b| format!("{b:02x}")).collect()
}

impl RadialProfile {
    /// Builds a profile from node states `(r, Y, Y')`, recomputing the dense
    /// interpolant and validating every structural invariant.
    pub(crate) fn from_nodes(
        params: PotentialParams,
        nodes: &[(f64, f64, f64)],
        a_est: f64,
        a_err: f64,
    ) -> Result<Self, RadialError> {
        params.validate()?;
        let invalid = |msg: String| RadialError::InvalidProfile(msg);
        if nodes.len() < 2 {
            return Err(invalid(format!("need at least 2 nodes, got {}", nodes.len())));
        }
        if !(a_err >= 0.0 && a_err.is_finite()) {
            return Err(invalid(format!("a_err = {a_err} must be finite and >= 0")));
        }
        for (k, &(r, y, yp)) in nodes.iter().enumerate() {
            if !(r.is_finite() && y.is_finite() && yp.is_finite()) {
                return Err(invalid(format!("non-finite state at node {k}")));
            }
            if !(r > 0.0) {
                return Err(invalid(format!("grid[{k}] = {r} must be positive")));
            }
            if !(yp > 0.0) {
                return Err(invalid(format!("Y'[{k}] = {yp} must be positive")));
            }
            if k > 0 {
                let (r_prev, y_prev, yp_prev) = nodes[k - 1];
                if r <= r_prev {
                    return Err(invalid(format!("grid not strictly increasing at node {k}")));
                }
                if y <= y_prev {
                    return Err(invalid(format!("Y not strictly increasing at node {k}")));
                }
                if yp <= yp_prev {
                    return Err(invalid(format!("Y' not strictly increasing at node {k}")));
                }
            }
        }
        let r_max = nodes[nodes.len() - 1].0;
        if !(a_est.is_finite() && a_est > r_max) {
            return Err(invalid(format!(
                "a_est = {a_est} must be finite and exceed r_max = {r_max}"
            )));
        }
        let intervals = nodes
            .windows(2)
            .map(|w| {
                HermiteInterval::from_node_states(
                    params.n,
                    w[0].0,
                    w[1].0,
                    (w[0].1, w[0].2),
                    (w[1].1, w[1].2),
                )
            })
            .collect();
        let fingerprint = solver_fingerprint(&params);
        let series = SeriesStart::for_params(&params);
        Ok(RadialProfile {
            series,
            grid: nodes.iter().map(|n| n.0).collect(),
            y: nodes.iter().map(|n| n.1).collect(),
            yp: nodes.iter().map(|n| n.2).collect(),
            intervals,
            a_est,
            a_err,
            fingerprint,
            params,
        })
    }

    pub fn params(&self) -> &PotentialParams {
        &self.params
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn y_nodes(&self) -> &[f64] {
        &self.y
    }

    pub fn yp_nodes(&self) -> &[f64] {
        &self.yp
    }

    pub fn intervals(&self) -> &[HermiteInterval] {
        &self.intervals
    }

    /// Radius below which the series start is authoritative.
    pub fn handoff(&self) -> f64 {
        self.grid[0]
    }

    pub fn a_err(&self) -> f64 {
        self.a_err
    }

    pub fn solver_fingerprint(&self) -> &str {
        &self.fingerprint
    }

    fn interval_index(&self, r: f64) -> usize {
        // First interval whose right endpoint reaches r; exact nodes resolve
        // to the interval ending there.
        let k = self.grid.partition_point(|&g| g < r);
        k.saturating_sub(1).min(self.intervals.len() - 1)
    }

    /// Equation residual of the dense interpolant at an off-node radius:
    /// `|(Yh'/r)^(n-1) Yh'' - e^Yh| / e^Yh`, with `Yh''` from differentiating
    /// the `Y'` interpolant rather than from the equation identity.
    pub fn ode_residual(&self, r: f64) -> Result<f64, RadialError> {
        if !(r >= 0.0) || r > self.r_max() {
            return Err(RadialError::OutOfRange {
                r,
                r_max: self.r_max(),
                a_est: self.a_est,
            });
        }
        if r <= self.handoff() {
            return Err(RadialError::UseSeriesResidual {
                r,
                handoff: self.handoff(),
            });
        }
        let iv = &self.intervals[self.interval_index(r)];
        let yh = iv.eval_y(r);
        let yph = iv.eval_yp(r);
        let ypph = iv.eval_ypp_from_interpolant(r);
        let ey = yh.exp();
        Ok(((yph / r).powi(self.params.n as i32 - 1) * ypph - ey).abs() / ey)
    }

    /// Rescales by `lambda`: the new profile solves the same equation with
    /// `y0_new = y0 + 2n ln(lambda)`, grid `r/lambda`, values
    /// `Y + 2n ln(lambda)`, slopes `lambda Y'`, and `a_est / lambda`.
    pub fn rescale(&self, lambda: f64) -> Result<RadialProfile, RadialError> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(RadialError::InvalidScale { lambda });
        }
        let two_n_ln = 2.0 * f64::from(self.params.n) * lambda.ln();
        let params = PotentialParams {
            y0: self.params.y0 + two_n_ln,
            blowup_threshold: self.params.blowup_threshold * lambda,
            ..self.params.clone()
        };
        let nodes: Vec<(f64, f64, f64)> = self
            .grid
            .iter()
            .zip(self.y.iter().zip(self.yp.iter()))
            .map(|(&r, (&y, &yp))| (r / lambda, y + two_n_ln, yp * lambda))
            .collect();
        RadialProfile::from_nodes(params, &nodes, self.a_est / lambda, self.a_err / lambda)
    }

    pub fn to_json(&self) -> String {
        let file = ProfileFile {
            format_version: PROFILE_FORMAT_VERSION,
            params: self.params.clone(),
            grid: self.grid.clone(),
            y: self.y.clone(),
            yp: self.yp.clone(),
            interpolant_coeffs: self
                .intervals
                .iter()
                .map(|iv| iv.y.iter().chain(iv.yp.iter()).copied().collect())
                .collect(),
            a_est: self.a_est,
            a_err: self.a_err,
            solver_fingerprint: self.fingerprint.clone(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("profile serialization");
        s.push('\n');
        s
    }

    /// Parses and structurally validates a profile. The dense interpolant is
    /// rebuilt from the node states; numerical certificates (residuals) are
    /// the verification suite's job, so a tampered but well-formed profile
    /// loads and then fails verification.
    pub fn from_json(text: &str) -> Result<RadialProfile, RadialError> {
        let file: ProfileFile = serde_json::from_str(text)
            .map_err(|e| RadialError::InvalidProfile(format!("JSON parse: {e}")))?;
        if file.format_version != PROFILE_FORMAT_VERSION {
            return Err(RadialError::InvalidProfile(format!(
                "format_version {} unsupported (expected {PROFILE_FORMAT_VERSION})",
                file.format_version
            )));
        }
        if file.grid.len() != file.y.len() || file.grid.len() != file.yp.len() {
            return Err(RadialError::InvalidProfile(format!(
                "array lengths differ: grid {}, Y {}, Yp {}",
                file.grid.len(),
                file.y.len(),
                file.yp.len()
            )));
        }
        if file.interpolant_coeffs.len() + 1 != file.grid.len()
            || file.interpolant_coeffs.iter().any(|c| c.len() != 12)
        {
            return Err(RadialError::InvalidProfile(
                "interpolant_coeffs must hold 12 coefficients per interval".into(),
            ));
        }
        if file.solver_fingerprint != solver_fingerprint(&file.params) {
            return Err(RadialError::InvalidProfile(
                "solver fingerprint does not match the stored parameters".into(),
            ));
        }
        let nodes: Vec<(f64, f64, f64)> = file
            .grid
            .iter()
            .zip(file.y.iter().zip(file.yp.iter()))
            .map(|(&r, (&y, &yp))| (r, y, yp))
            .collect();
        RadialProfile::from_nodes(file.params, &nodes, file.a_est, file.a_err)
    }
}

impl RadialPotential for RadialProfile {
    fn dim(&self) -> u32 {
        self.params.n
    }

    /// `(Y, Y', Y'')`: series below the handoff, stored state at exact grid
    /// nodes, dense interpolant in between. `Y''` comes from the equation
    /// identity for r above the handoff and from the series below it.
    fn eval(&self, r: f64) -> Result<(f64, f64, f64), RadialError> {
        if !(r >= 0.0) || r > self.r_max() {
            return Err(RadialError::OutOfRange {
                r,
                r_max: self.r_max(),
                a_est: self.a_est,
            });
        }
        if r < self.handoff() {
            return Ok(self.series.eval(self.params.y0, r));
        }
        match self
            .grid
            .binary_search_by(|g| g.partial_cmp(&r).expect("finite grid"))
        {
            Ok(k) => {
                let (y, yp) = (self.y[k], self.yp[k]);
                Ok((y, yp, ypp_identity(self.params.n, r, y, yp)))
            }
            Err(k) => {
                let iv = &self.intervals[k - 1];
                let y = iv.eval_y(r);
                let yp = iv.eval_yp(r);
                Ok((y, yp, ypp_identity(self.params.n, r, y, yp)))
            }
        }
    }

    fn r_max(&self) -> f64 {
        self.grid[self.grid.len() - 1]
    }

    fn a_est(&self) -> f64 {
        self.a_est
    }

    fn fingerprint(&self) -> String {
        self.fingerprint.clone()
    }
}
