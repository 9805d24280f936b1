//! Calabi's inhomogeneous Einstein metric on a tube domain, computed and
//! certified.
//!
//! The manifold is the tube `D_a x R^n` over a ball of finite radius `a`,
//! with Kahler potential `f(x) = Y(|x|)` where `Y` solves the radial
//! Monge-Ampere equation
//!
//! ```text
//! (Y'/r)^(n-1) Y'' = e^Y,    Y(0) = y0,  Y'(0) = 0.
//! ```
//!
//! `Y` is strictly convex and blows up at a finite radius `a` determined by
//! `(n, y0)`. The induced metric is Kahler-Einstein, and the gradient map
//! extends to a global symplectomorphism `(x, y) -> (grad f(x), y)` from the
//! tube onto flat `R^2n`.
//!
//! - [`radial`]: the profile solver (series start, adaptive integration with
//!   dense output, blow-up radius extrapolation, the scaling transform).
//! - [`geometry`]: potential/gradient/Hessian, the metric and symplectic
//!   blocks, Monge-Ampere and Einstein certificates, sectional curvature.
//! - [`symplectic`]: the gradient map, its Jacobian, the monotone inverse,
//!   pullback certificates, and the properness table.
//! - [`verify`]: the named check suite with machine-readable reports.

// Negated comparisons like `!(r >= 0.0)` are NaN guards: the negation must
// treat NaN as out of range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod geometry;
pub mod radial;
pub mod symplectic;
pub mod verify;

pub use geometry::{GeometryError, GeometryMatrices};
pub use radial::{
    estimate_radius, solve_radial, PotentialParams, RadialError, RadialPotential, RadialProfile,
};
pub use symplectic::{ImagePoint, MapError, TubePoint};
pub use verify::{verify_profile, ToleranceOverrides, VerificationReport, VerifyConfig};

/// Certificate tolerances enforced by the verification suite and the
/// acceptance tests. Values are pinned here so every consumer (library
/// checks, CLI reports, integration tests) agrees on the contract.
pub mod tolerances {
    /// Max relative residual of the dense interpolant in the radial equation
    /// at off-node radii.
    pub const ODE_RESIDUAL: f64 = 1e-6;
    /// `(Y''(0))^n` must equal `e^{y0}` to this relative accuracy.
    pub const CENTER_IDENTITY: f64 = 1e-12;
    /// Relative mismatch between a rescaled solution and a direct solve at
    /// the shifted parameter.
    pub const SCALING_MATCH: f64 = 1e-7;
    /// Relative spread of `a_est(y0) * exp(y0 / 2n)` across `y0`.
    pub const RADIUS_SCALING: f64 = 1e-5;
    /// `|log det Hess f - f|` at sampled interior points.
    pub const MONGE_AMPERE: f64 = 1e-6;
    /// Allowed deviation from 4 of the Einstein residual ratio under
    /// h-halving (second-order stencils).
    pub const EINSTEIN_RATIO_DEV: f64 = 0.5;
    /// Pullback certificate from the analytic Jacobian.
    pub const PULLBACK_ANALYTIC: f64 = 1e-12;
    /// Pullback certificate from the finite-difference Jacobian at h = 1e-4.
    pub const PULLBACK_FD: f64 = 1e-6;
    /// Relative error of `phi_inverse(phi(q))` against `q`.
    pub const ROUNDTRIP: f64 = 1e-10;
    /// |K| bound for the flat control metric.
    pub const FLAT_CURVATURE: f64 = 1e-4;
    /// The final properness row must track the blow-up threshold within this
    /// factor.
    pub const PROPERNESS_TRACKING_FACTOR: f64 = 2.0;
}

pub(crate) mod sampling {
    use nalgebra::DVector;
    use rand::Rng;

    /// Standard normal via Box-Muller; uses two uniform draws per call.
    pub fn normal<R: Rng>(rng: &mut R) -> f64 {
        let u1: f64 = 1.0 - rng.gen::<f64>();
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn unit_vector<R: Rng>(rng: &mut R, dim: usize) -> DVector<f64> {
        loop {
            let v = DVector::from_fn(dim, |_, _| normal(rng));
            let n = v.norm();
            if n > 1e-8 {
                return v / n;
            }
        }
    }

    /// Uniform over the ball of radius `radius` (density uniform in volume).
    pub fn ball_point<R: Rng>(rng: &mut R, dim: usize, radius: f64) -> DVector<f64> {
        let dir = unit_vector(rng, dim);
        let u: f64 = rng.gen();
        dir * (radius * u.powf(1.0 / dim as f64))
    }
}
