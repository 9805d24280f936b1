//! Radial potential profiles: the scalar equation `(Y'/r)^(n-1) Y'' = e^Y`.
//!
//! Solutions with `Y(0) = y0`, `Y'(0) = 0` are strictly convex and blow up at
//! a finite radius `a`. The removable singularity at `r = 0` is handled by an
//! even quartic series; integration hands off at a small positive radius and
//! stops once `Y'` reaches the configured blow-up threshold. The blow-up
//! radius is then extrapolated from the tail, where `Y'(r) ~ (n+1)/(a - r)`.

mod profile;
mod solver;

pub use profile::{HermiteInterval, RadialProfile, PROFILE_FORMAT_VERSION};
pub use solver::{estimate_radius, solve_radial, solve_radial_with_handoff};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_REL_TOL: f64 = 1e-10;
pub const DEFAULT_ABS_TOL: f64 = 1e-12;
pub const DEFAULT_BLOWUP_THRESHOLD: f64 = 1e5;
pub const DEFAULT_MAX_STEPS: usize = 500_000;
/// Radius at which integration takes over from the series start.
pub const DEFAULT_HANDOFF: f64 = 1e-4;
/// Largest handoff radius at which the quartic series is accepted.
pub const SERIES_HANDOFF_CAP: f64 = 1e-1;
/// Minimum number of tail nodes needed to fit the blow-up radius.
pub const MIN_TAIL_NODES: usize = 5;

#[derive(Debug, Error)]
pub enum RadialError {
    #[error("dimension n = {n} is unsupported; n = 1 requires the experimental flag, n = 0 is invalid")]
    UnsupportedDimension { n: u32 },
    #[error("invalid parameter {name}: {reason}")]
    InvalidParams { name: &'static str, reason: String },
    #[error("series handoff r0 = {r0:e} outside (0, {cap:e}]")]
    InvalidHandoff { r0: f64, cap: f64 },
    #[error("integration incomplete after {steps} steps: r = {r:.6}, Y' = {yp:.3e} still below the blow-up threshold")]
    IncompleteProfile { steps: usize, r: f64, yp: f64 },
    #[error("integrator state became non-physical at r = {r:.6e}: {reason}")]
    InternalConsistency { r: f64, reason: String },
    #[error("radius {r:e} outside the computed range [0, {r_max:.6}] (blow-up estimate a = {a_est:.6})")]
    OutOfRange { r: f64, r_max: f64, a_est: f64 },
    #[error("r = {r:e} is at or below the series handoff {handoff:e}; residuals there are governed by the series truncation, not the interpolant")]
    UseSeriesResidual { r: f64, handoff: f64 },
    #[error("blow-up tail has {usable} usable node(s), need at least {min}; the profile must reach its blow-up threshold")]
    InsufficientTail { usable: usize, min: usize },
    #[error("scale factor {lambda} must be positive and finite")]
    InvalidScale { lambda: f64 },
    #[error("profile data failed validation: {0}")]
    InvalidProfile(String),
}

/// Parameters of a radial solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialParams {
    /// Complex dimension of the tube domain; the spatial slice is an n-ball.
    pub n: u32,
    /// Value of the potential at the center, `Y(0)`.
    pub y0: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Integration stops once `Y'` reaches this value. Must exceed
    /// `e^{y0/n}`, the curvature scale at the center.
    pub blowup_threshold: f64,
    pub max_steps: usize,
    /// Permits n = 1. That dimension is outside the supported geometry but
    /// has the closed form `Y = -2 ln cos(r/sqrt(2)) + ...`, which makes it a
    /// useful end-to-end check of the integrator.
    #[serde(default)]
    pub experimental: bool,
}

impl PotentialParams {
    pub fn new(n: u32, y0: f64) -> Self {
        PotentialParams {
            n,
            y0,
            rel_tol: DEFAULT_REL_TOL,
            abs_tol: DEFAULT_ABS_TOL,
            blowup_threshold: DEFAULT_BLOWUP_THRESHOLD,
            max_steps: DEFAULT_MAX_STEPS,
            experimental: false,
        }
    }

    pub fn validate(&self) -> Result<(), RadialError> {
        if self.n == 0 || (self.n == 1 && !self.experimental) {
            return Err(RadialError::UnsupportedDimension { n: self.n });
        }
        let finite_pos = |name: &'static str, v: f64| -> Result<(), RadialError> {
            if !(v.is_finite() && v > 0.0) {
                return Err(RadialError::InvalidParams {
                    name,
                    reason: format!("{v} is not positive and finite"),
                });
            }
            Ok(())
        };
        if !self.y0.is_finite() {
            return Err(RadialError::InvalidParams {
                name: "y0",
                reason: format!("{} is not finite", self.y0),
            });
        }
        finite_pos("rel_tol", self.rel_tol)?;
        finite_pos("abs_tol", self.abs_tol)?;
        finite_pos("blowup_threshold", self.blowup_threshold)?;
        let center_scale = (self.y0 / f64::from(self.n)).exp();
        if self.blowup_threshold <= center_scale {
            return Err(RadialError::InvalidParams {
                name: "blowup_threshold",
                reason: format!(
                    "{} does not exceed the center curvature scale e^(y0/n) = {center_scale:.6e}",
                    self.blowup_threshold
                ),
            });
        }
        if self.max_steps == 0 {
            return Err(RadialError::InvalidParams {
                name: "max_steps",
                reason: "must be positive".into(),
            });
        }
        Ok(())
    }
}

/// Coefficients of the even quartic start `Y = y0 + (b/2) r^2 + c r^4`.
///
/// Matching the equation at `r -> 0` forces `b = e^{y0/n}` (so `b^n = e^{y0}`
/// and `Y''(0) = b`) and, at the next even order, `c = e^{2y0/n}/(8(n+2))`.
/// The truncation leaves an O(r^4) relative residual in the equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesStart {
    pub b: f64,
    pub c: f64,
}

impl SeriesStart {
    pub fn for_params(params: &PotentialParams) -> Self {
        let n = f64::from(params.n);
        SeriesStart {
            b: (params.y0 / n).exp(),
            c: (2.0 * params.y0 / n).exp() / (8.0 * (n + 2.0)),
        }
    }

    /// `(Y, Y', Y'')` of the series at radius `r`.
    pub fn eval(&self, y0: f64, r: f64) -> (f64, f64, f64) {
        let r2 = r * r;
        let y = y0 + 0.5 * self.b * r2 + self.c * r2 * r2;
        let yp = self.b * r + 4.0 * self.c * r2 * r;
        let ypp = self.b + 12.0 * self.c * r2;
        (y, yp, ypp)
    }
}

/// `(Y, Y')` of the series start at the handoff radius `r0`.
pub fn series_start(params: &PotentialParams, r0: f64) -> Result<(f64, f64), RadialError> {
    params.validate()?;
    if !(r0 > 0.0 && r0 <= SERIES_HANDOFF_CAP) {
        return Err(RadialError::InvalidHandoff {
            r0,
            cap: SERIES_HANDOFF_CAP,
        });
    }
    let series = SeriesStart::for_params(params);
    let (y, yp, _) = series.eval(params.y0, r0);
    Ok((y, yp))
}

/// `Y''` from the equation itself, valid wherever `(Y, Y')` solve it.
pub(crate) fn ypp_identity(n: u32, r: f64, y: f64, yp: f64) -> f64 {
    y.exp() * (r / yp).powi(n as i32 - 1)
}

/// `Y'''` from differentiating the equation.
pub(crate) fn yppp_identity(n: u32, r: f64, yp: f64, ypp: f64) -> f64 {
    let m = f64::from(n) - 1.0;
    ypp * (yp + m / r - m * ypp / yp)
}

/// A radial potential of a tube-domain metric: the solved profile, or a
/// closed-form control exercising the same geometry paths.
pub trait RadialPotential {
    /// Complex dimension n.
    fn dim(&self) -> u32;
    /// `(Y, Y', Y'')` at radius `r >= 0`.
    fn eval(&self, r: f64) -> Result<(f64, f64, f64), RadialError>;
    /// Largest radius with computed data.
    fn r_max(&self) -> f64;
    /// Blow-up radius estimate; infinite for potentials that never blow up.
    fn a_est(&self) -> f64;
    /// Identifies the potential and how it was produced.
    fn fingerprint(&self) -> String;
}
