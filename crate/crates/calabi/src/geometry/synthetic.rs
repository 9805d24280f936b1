//! Closed-form radial potentials used as controls: geometry code paths can be
//! exercised against potentials whose curvature and residuals are known
//! exactly, including ones that do *not* solve the Monge-Ampere equation.

use crate::radial::{RadialError, RadialPotential};

/// `Y(r) = alpha r^2`. For `alpha = 1/2` the Hessian is the identity and the
/// metric is flat; every sectional curvature vanishes and the Einstein
/// residual converges to `|0 - Hess f| = 2 alpha`.
#[derive(Debug, Clone, Copy)]
pub struct FlatPotential {
    n: u32,
    alpha: f64,
    r_max: f64,
}

impl FlatPotential {
    pub fn new(n: u32, alpha: f64, r_max: f64) -> Self {
        assert!(n >= 1, "dimension must be at least 1");
        assert!(alpha > 0.0 && alpha.is_finite(), "alpha must be positive");
        assert!(r_max > 0.0 && r_max.is_finite(), "r_max must be positive");
        Self { n, alpha, r_max }
    }
}

impl RadialPotential for FlatPotential {
    fn dim(&self) -> u32 {
        self.n
    }

    fn eval(&self, r: f64) -> Result<(f64, f64, f64), RadialError> {
        if !(0.0..=self.r_max).contains(&r) {
            return Err(RadialError::OutOfRange {
                r,
                r_max: self.r_max,
                a_est: f64::INFINITY,
            });
        }
        Ok((self.alpha * r * r, 2.0 * self.alpha * r, 2.0 * self.alpha))
    }

    fn r_max(&self) -> f64 {
        self.r_max
    }

    fn a_est(&self) -> f64 {
        f64::INFINITY
    }

    fn fingerprint(&self) -> String {
        format!("synthetic flat n={} alpha={:e}", self.n, self.alpha)
    }
}

/// `Y(r) = r^2/2 + r^4`: strictly convex but neither Monge-Ampere nor
/// Einstein, so both residuals converge to genuinely nonzero values.
#[derive(Debug, Clone, Copy)]
pub struct QuarticPotential {
    n: u32,
    r_max: f64,
}

impl QuarticPotential {
    pub fn new(n: u32, r_max: f64) -> Self {
        assert!(n >= 1, "dimension must be at least 1");
        assert!(r_max > 0.0 && r_max.is_finite(), "r_max must be positive");
        Self { n, r_max }
    }
}

impl RadialPotential for QuarticPotential {
    fn dim(&self) -> u32 {
        self.n
    }

    fn eval(&self, r: f64) -> Result<(f64, f64, f64), RadialError> {
        if !(0.0..=self.r_max).contains(&r) {
            return Err(RadialError::OutOfRange {
                r,
                r_max: self.r_max,
                a_est: f64::INFINITY,
            });
        }
        let r2 = r * r;
        Ok((0.5 * r2 + r2 * r2, r + 4.0 * r2 * r, 1.0 + 12.0 * r2))
    }

    fn r_max(&self) -> f64 {
        self.r_max
    }

    fn a_est(&self) -> f64 {
        f64::INFINITY
    }

    fn fingerprint(&self) -> String {
        format!("synthetic quartic n={}", self.n)
    }
}
