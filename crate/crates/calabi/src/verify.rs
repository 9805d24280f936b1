//! End-to-end verification of a solved profile: every analytic identity the
//! construction promises is re-measured numerically through an independent
//! route and compared against a pinned tolerance. The result is a
//! serializable report with one pass/fail line per check.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{self, GeometryError};
use crate::radial::{RadialError, RadialPotential, RadialProfile};
use crate::sampling;
use crate::symplectic::{self, MapError, TubePoint};
use crate::tolerances;

/// Spatial sampling radius for pointwise identity checks, as a fraction of
/// the computed radius.
pub const SAMPLE_RADIUS_FRACTION: f64 = 0.9;
/// Pullback samples stay deeper inside the domain so the finite-difference
/// stencil never leaves it.
pub const PULLBACK_RADIUS_FRACTION: f64 = 0.6;
/// Roundtrip samples for the inverse map.
pub const ROUNDTRIP_RADIUS_FRACTION: f64 = 0.8;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("invalid verification configuration: {reason}")]
    InvalidConfig { reason: String },
    #[error(transparent)]
    Radial(#[from] RadialError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("could not serialize report: {0}")]
    Serialize(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Uniformly spaced off-node radii for the interpolant residual; all
    /// interval midpoints are checked in addition.
    pub ode_samples: usize,
    pub monge_ampere_samples: usize,
    pub einstein_points: usize,
    /// Base step of the Einstein ratio test; the residual is measured at this
    /// step and at half of it, and their ratio must sit near the second-order
    /// value 4.
    pub einstein_step: f64,
    pub positivity_samples: usize,
    pub pullback_samples: usize,
    pub pullback_step: f64,
    pub roundtrip_samples: usize,
    /// Fractions of `r_max` at which the gradient norm is tabulated; must be
    /// increasing, the last one close to 1 so the final norm tracks the
    /// blow-up threshold.
    pub properness_fractions: Vec<f64>,
    #[serde(default)]
    pub tolerance_overrides: ToleranceOverrides,
}

/// Per-check tolerance overrides; `None` keeps the pinned default from
/// [`crate::tolerances`].
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ToleranceOverrides {
    pub ode_residual: Option<f64>,
    pub monge_ampere: Option<f64>,
    pub pullback_analytic: Option<f64>,
    pub pullback_fd: Option<f64>,
    pub roundtrip: Option<f64>,
}

impl ToleranceOverrides {
    fn validate(&self) -> Result<(), VerifyError> {
        let named = [
            ("ode_residual", self.ode_residual),
            ("monge_ampere", self.monge_ampere),
            ("pullback_analytic", self.pullback_analytic),
            ("pullback_fd", self.pullback_fd),
            ("roundtrip", self.roundtrip),
        ];
        for (name, value) in named {
            if let Some(v) = value {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(VerifyError::InvalidConfig {
                        reason: format!("tolerance override {name} = {v} must be positive"),
                    });
                }
            }
        }
        Ok(())
    }
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            ode_samples: 100,
            monge_ampere_samples: 50,
            einstein_points: 10,
            einstein_step: 2e-3,
            positivity_samples: 50,
            pullback_samples: 200,
            pullback_step: 1e-4,
            roundtrip_samples: 100,
            properness_fractions: vec![0.1, 0.25, 0.5, 0.75, 0.9, 0.99, 0.999, 1.0 - 1e-9],
            tolerance_overrides: ToleranceOverrides::default(),
        }
    }
}

impl VerifyConfig {
    fn validate(&self) -> Result<(), VerifyError> {
        if self.properness_fractions.len() < 2 {
            return Err(VerifyError::InvalidConfig {
                reason: "need at least two properness fractions".into(),
            });
        }
        if self
            .properness_fractions
            .windows(2)
            .any(|w| !(w[0] < w[1]))
        {
            return Err(VerifyError::InvalidConfig {
                reason: "properness fractions must be strictly increasing".into(),
            });
        }
        if !(self.einstein_step > 0.0 && self.einstein_step.is_finite()) {
            return Err(VerifyError::InvalidConfig {
                reason: format!("einstein step {} must be positive", self.einstein_step),
            });
        }
        if !(self.pullback_step > 0.0 && self.pullback_step.is_finite()) {
            return Err(VerifyError::InvalidConfig {
                reason: format!("pullback step {} must be positive", self.pullback_step),
            });
        }
        self.tolerance_overrides.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckOp {
    /// Pass when `value <= tolerance`.
    Le,
    /// Pass when `value > tolerance`.
    Gt,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub op: CheckOp,
    pub pass: bool,
}

impl Check {
    fn le(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            op: CheckOp::Le,
            pass: value <= tolerance,
        }
    }

    fn gt(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            op: CheckOp::Gt,
            pass: value > tolerance,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub generated_at: String,
    pub profile_fingerprint: String,
    pub params: crate::radial::PotentialParams,
    pub config: VerifyConfig,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl VerificationReport {
    pub fn to_json(&self) -> Result<String, VerifyError> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// RFC 3339 timestamp; honors `SOURCE_DATE_EPOCH` (integer Unix seconds) so
/// reruns can be made byte-identical.
fn timestamp() -> String {
    let secs = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .unwrap_or_else(|| chrono::Utc::now().timestamp());
    chrono::DateTime::<chrono::Utc>::from_timestamp(secs, 0)
        .unwrap_or_else(|| chrono::DateTime::from_timestamp(0, 0).unwrap())
        .to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Runs every check against the profile and collects the report. Checks are
/// evaluated in a fixed order with a seeded generator, so identical inputs
/// give identical reports (up to the timestamp).
pub fn verify_profile(
    profile: &RadialProfile,
    config: &VerifyConfig,
) -> Result<VerificationReport, VerifyError> {
    config.validate()?;
    let n = profile.params().n as usize;
    let r_max = profile.r_max();
    let handoff = profile.handoff();
    let overrides = &config.tolerance_overrides;
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let mut checks = Vec::new();

    // Interpolant must satisfy the equation it claims to solve, measured by
    // re-differentiating the dense output rather than by the equation itself.
    let mut ode_max: f64 = 0.0;
    for i in 0..config.ode_samples {
        let r = handoff + (i as f64 + 1.0) / (config.ode_samples as f64 + 1.0) * (r_max - handoff);
        ode_max = ode_max.max(profile.ode_residual(r)?);
    }
    for iv in profile.intervals() {
        let mid = 0.5 * (iv.r_lo + iv.r_hi);
        ode_max = ode_max.max(profile.ode_residual(mid)?);
    }
    checks.push(Check::le(
        "ode_residual_max",
        ode_max,
        overrides.ode_residual.unwrap_or(tolerances::ODE_RESIDUAL),
    ));

    // det Hess f(0) = Y''(0)^n must equal e^{Y(0)}.
    let (y0, _, ypp0) = profile.eval(0.0)?;
    let center_dev = (ypp0.powi(n as i32) - y0.exp()).abs();
    checks.push(Check::le(
        "center_monge_ampere",
        center_dev,
        tolerances::CENTER_IDENTITY,
    ));

    // log det Hess f = f at random interior points.
    let mut ma_max: f64 = 0.0;
    for _ in 0..config.monge_ampere_samples {
        let x = ball_vec(&mut rng, n, SAMPLE_RADIUS_FRACTION * r_max);
        ma_max = ma_max.max(geometry::monge_ampere_residual(profile, &x)?);
    }
    checks.push(Check::le(
        "monge_ampere_max",
        ma_max,
        overrides.monge_ampere.unwrap_or(tolerances::MONGE_AMPERE),
    ));

    // The Einstein defect must be pure truncation error: halving the stencil
    // divides the residual by about four.
    let mut ratio_dev: f64 = 0.0;
    for _ in 0..config.einstein_points {
        let x = ball_vec(&mut rng, n, SAMPLE_RADIUS_FRACTION * r_max);
        let r1 = geometry::einstein_residual(profile, &x, config.einstein_step)?;
        let r2 = geometry::einstein_residual(profile, &x, 0.5 * config.einstein_step)?;
        let dev = if r2 == 0.0 {
            if r1 == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (r1 / r2 - 4.0).abs()
        };
        ratio_dev = ratio_dev.max(dev);
    }
    checks.push(Check::le(
        "einstein_ratio_deviation",
        ratio_dev,
        tolerances::EINSTEIN_RATIO_DEV,
    ));

    // The metric must stay positive definite.
    let mut min_eig = f64::INFINITY;
    for _ in 0..config.positivity_samples {
        let x = ball_vec(&mut rng, n, SAMPLE_RADIUS_FRACTION * r_max);
        let h = geometry::hess_potential(profile, &x)?;
        let eigs = h.symmetric_eigen().eigenvalues;
        min_eig = min_eig.min(eigs.min());
    }
    checks.push(Check::gt("metric_min_eigenvalue", min_eig, 0.0));

    // Pullback of the standard form through the analytic Jacobian is exact;
    // through a finite-difference Jacobian it is O(h^2).
    let mut pb_exact: f64 = 0.0;
    let mut pb_fd: f64 = 0.0;
    for _ in 0..config.pullback_samples {
        let x = ball_vec(&mut rng, n, PULLBACK_RADIUS_FRACTION * r_max);
        let y = ball_vec(&mut rng, n, PULLBACK_RADIUS_FRACTION * r_max);
        let z = TubePoint::new(x, y);
        pb_exact = pb_exact.max(symplectic::pullback_residual_analytic(profile, &z)?);
        pb_fd = pb_fd.max(symplectic::pullback_residual_fd(
            profile,
            &z,
            config.pullback_step,
        )?);
    }
    checks.push(Check::le(
        "pullback_analytic_max",
        pb_exact,
        overrides
            .pullback_analytic
            .unwrap_or(tolerances::PULLBACK_ANALYTIC),
    ));
    checks.push(Check::le(
        "pullback_fd_max",
        pb_fd,
        overrides.pullback_fd.unwrap_or(tolerances::PULLBACK_FD),
    ));

    // Mapping forward and back must reproduce the point.
    let mut rt_max: f64 = 0.0;
    for _ in 0..config.roundtrip_samples {
        let x = ball_vec(&mut rng, n, ROUNDTRIP_RADIUS_FRACTION * r_max);
        let y = ball_vec(&mut rng, n, ROUNDTRIP_RADIUS_FRACTION * r_max);
        let z = TubePoint::new(x, y);
        let w = symplectic::phi(profile, &z)?;
        let back = symplectic::phi_inverse(profile, &w)?;
        rt_max = rt_max.max((&back.x - &z.x).amax());
        rt_max = rt_max.max((&back.y - &z.y).amax());
    }
    checks.push(Check::le(
        "roundtrip_max",
        rt_max,
        overrides.roundtrip.unwrap_or(tolerances::ROUNDTRIP),
    ));

    // The gradient norm must grow strictly along the radius and reach the
    // blow-up threshold scale at the outer edge.
    let table = symplectic::properness_table(profile, &config.properness_fractions)?;
    let mut min_increment = f64::INFINITY;
    for w in table.windows(2) {
        min_increment = min_increment.min(w[1].1 - w[0].1);
    }
    checks.push(Check::gt(
        "properness_min_increment",
        min_increment,
        0.0,
    ));
    let final_norm = table.last().map(|row| row.1).unwrap_or(f64::NAN);
    let threshold = profile.params().blowup_threshold;
    let tracking = (final_norm / threshold).max(threshold / final_norm);
    checks.push(Check::le(
        "properness_threshold_tracking",
        tracking,
        tolerances::PROPERNESS_TRACKING_FACTOR,
    ));

    let pass = checks.iter().all(|c| c.pass);
    Ok(VerificationReport {
        schema_version: REPORT_SCHEMA_VERSION,
        generated_at: timestamp(),
        profile_fingerprint: profile.solver_fingerprint().to_string(),
        params: profile.params().clone(),
        config: config.clone(),
        checks,
        pass,
    })
}

fn ball_vec(rng: &mut ChaCha12Rng, dim: usize, radius: f64) -> DVector<f64> {
    sampling::ball_point(rng, dim, radius)
}
