//! Pointwise geometry of the tube-domain metric: Kahler potential, gradient
//! and Hessian, the symplectic and metric blocks, and the certificates that
//! the metric solves the Monge-Ampere equation and is Einstein.
//!
//! All quantities are rotationally invariant functions of a radial potential,
//! so every operation takes an `impl RadialPotential`: a solved profile or a
//! closed-form control.

pub mod curvature;
pub mod synthetic;

pub use curvature::{
    curvature_scan, sectional_curvature, sectional_curvature_from_metric, CurvatureSample,
    CurvatureScan, CurvatureSummary, Histogram, HistogramConfig, ScanConfig,
    DEFAULT_CURVATURE_STEP,
};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::radial::{RadialError, RadialPotential};

/// Planes with a smaller normalized Gram determinant are rejected.
pub const PLANE_DEGENERACY_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("|x| = {r:.6} exceeds the computed radius r_max = {r_max:.6}; re-solve with a higher blow-up threshold to extend the domain")]
    OutsideComputedDomain { r: f64, r_max: f64 },
    #[error("|x| = {r:.6} is at or beyond the blow-up radius estimate a = {a_est:.6}; the point is outside the manifold")]
    OutsideManifold { r: f64, a_est: f64 },
    #[error("stencil of half-width {half_width:e} at |x| = {r:.6} leaves the computed domain (r_max = {r_max:.6})")]
    StencilOutOfDomain {
        r: f64,
        half_width: f64,
        r_max: f64,
    },
    #[error("plane is numerically degenerate: normalized Gram determinant {gram:.3e} below {floor:e}")]
    DegeneratePlane { gram: f64, floor: f64 },
    #[error("step h = {h} must be positive and finite")]
    InvalidStep { h: f64 },
    #[error("metric is numerically singular at a stencil point")]
    SingularMetric,
    #[error("scan radius {r} outside [0, 0.9 * r_max = {max:.6})")]
    ScanRadiusOutOfRange { r: f64, max: f64 },
    #[error("invalid scan configuration: {reason}")]
    InvalidScanConfig { reason: String },
    #[error("curvature sample {index} is not finite")]
    NonFiniteSample { index: usize },
    #[error("expected dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Radial(#[from] RadialError),
}

/// Hessian `H`, symplectic form `Omega = [[0, H], [-H, 0]]`, and metric
/// `G = diag(H, H)` at a point, all in tube coordinates `(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryMatrices {
    pub h: DMatrix<f64>,
    pub omega: DMatrix<f64>,
    pub g: DMatrix<f64>,
}

fn check_dim<P: RadialPotential>(pot: &P, x: &DVector<f64>) -> Result<(), GeometryError> {
    let n = pot.dim() as usize;
    if x.len() != n {
        return Err(GeometryError::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    Ok(())
}

fn check_radius<P: RadialPotential>(pot: &P, r: f64) -> Result<(), GeometryError> {
    if !(r < pot.a_est()) {
        return Err(GeometryError::OutsideManifold {
            r,
            a_est: pot.a_est(),
        });
    }
    if r > pot.r_max() {
        return Err(GeometryError::OutsideComputedDomain {
            r,
            r_max: pot.r_max(),
        });
    }
    Ok(())
}

/// `f(x) = Y(|x|)`.
pub fn potential<P: RadialPotential>(pot: &P, x: &DVector<f64>) -> Result<f64, GeometryError> {
    check_dim(pot, x)?;
    let r = x.norm();
    check_radius(pot, r)?;
    Ok(pot.eval(r)?.0)
}

/// `grad f = (Y'(r)/r) x`, extended by zero at the center.
pub fn grad_potential<P: RadialPotential>(
    pot: &P,
    x: &DVector<f64>,
) -> Result<DVector<f64>, GeometryError> {
    check_dim(pot, x)?;
    let r = x.norm();
    check_radius(pot, r)?;
    if r == 0.0 {
        return Ok(DVector::zeros(x.len()));
    }
    let (_, yp, _) = pot.eval(r)?;
    Ok(x * (yp / r))
}

/// `Hess f = (Y'/r) I + (Y'' - Y'/r) (x x^T)/r^2`, which is `Y''(0) I` at the
/// center. Eigenvalues: `Y''` on the radial line, `Y'/r` with multiplicity
/// n-1 on its orthogonal complement.
pub fn hess_potential<P: RadialPotential>(
    pot: &P,
    x: &DVector<f64>,
) -> Result<DMatrix<f64>, GeometryError> {
    check_dim(pot, x)?;
    let n = x.len();
    let r = x.norm();
    check_radius(pot, r)?;
    let (_, yp, ypp) = pot.eval(r)?;
    if r == 0.0 {
        return Ok(DMatrix::identity(n, n) * ypp);
    }
    let tangential = yp / r;
    let radial_excess = (ypp - tangential) / (r * r);
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let mut v = radial_excess * x[i] * x[j];
            if i == j {
                v += tangential;
            }
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    Ok(h)
}

/// Assembles `H`, `Omega`, and `G` at a spatial point.
pub fn assemble<P: RadialPotential>(
    pot: &P,
    x: &DVector<f64>,
) -> Result<GeometryMatrices, GeometryError> {
    let h = hess_potential(pot, x)?;
    Ok(matrices_from_hessian(&h))
}

pub(crate) fn matrices_from_hessian(h: &DMatrix<f64>) -> GeometryMatrices {
    let n = h.nrows();
    let mut omega = DMatrix::zeros(2 * n, 2 * n);
    let mut g = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            omega[(i, n + j)] = h[(i, j)];
            omega[(n + i, j)] = -h[(i, j)];
            g[(i, j)] = h[(i, j)];
            g[(n + i, n + j)] = h[(i, j)];
        }
    }
    GeometryMatrices {
        h: h.clone(),
        omega,
        g,
    }
}

/// `|log det Hess f - f|`. Zero exactly when the potential solves the
/// Monge-Ampere equation `det Hess f = e^f`.
pub fn monge_ampere_residual<P: RadialPotential>(
    pot: &P,
    x: &DVector<f64>,
) -> Result<f64, GeometryError> {
    let h = hess_potential(pot, x)?;
    let f = potential(pot, x)?;
    let det = h.lu().determinant();
    Ok((det.ln() - f).abs())
}

/// `|| FDHess(log det Hess f) - Hess f ||_inf` with second-order central
/// differences of step `h` in the spatial coordinates. For an Einstein
/// potential this is pure finite-difference error, O(h^2); for anything else
/// it converges to a nonzero obstruction.
pub fn einstein_residual<P: RadialPotential>(
    pot: &P,
    x: &DVector<f64>,
    h: f64,
) -> Result<f64, GeometryError> {
    check_dim(pot, x)?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(GeometryError::InvalidStep { h });
    }
    let r = x.norm();
    check_radius(pot, r)?;
    if r + 2.0 * h > pot.r_max() {
        return Err(GeometryError::StencilOutOfDomain {
            r,
            half_width: 2.0 * h,
            r_max: pot.r_max(),
        });
    }
    let n = x.len();
    let log_det = |u: &DVector<f64>| -> Result<f64, GeometryError> {
        let hm = hess_potential(pot, u)?;
        Ok(hm.lu().determinant().ln())
    };

    let g0 = log_det(x)?;
    let mut fd = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut up = x.clone();
        let mut dn = x.clone();
        up[i] += h;
        dn[i] -= h;
        fd[(i, i)] = (log_det(&up)? - 2.0 * g0 + log_det(&dn)?) / (h * h);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let mut pp = x.clone();
            let mut pm = x.clone();
            let mut mp = x.clone();
            let mut mm = x.clone();
            pp[i] += h;
            pp[j] += h;
            pm[i] += h;
            pm[j] -= h;
            mp[i] -= h;
            mp[j] += h;
            mm[i] -= h;
            mm[j] -= h;
            let v = (log_det(&pp)? - log_det(&pm)? - log_det(&mp)? + log_det(&mm)?)
                / (4.0 * h * h);
            fd[(i, j)] = v;
            fd[(j, i)] = v;
        }
    }
    let hess = hess_potential(pot, x)?;
    Ok((fd - hess).abs().max())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::PotentialParams;

    #[test]
    fn dimension_and_domain_errors() {
        let pot = synthetic::FlatPotential::new(2, 0.5, 4.0);
        let bad = DVector::from_vec(vec![0.1, 0.2, 0.3]);
        assert!(matches!(
            potential(&pot, &bad),
            Err(GeometryError::DimensionMismatch {
                expected: 2,
                got: 3
            })
        ));
        let far = DVector::from_vec(vec![4.5, 0.0]);
        assert!(matches!(
            potential(&pot, &far),
            Err(GeometryError::OutsideComputedDomain { .. })
        ));
    }

    #[test]
    fn computed_domain_and_manifold_errors_are_distinct() {
        let params = PotentialParams::new(2, 0.0);
        let profile = crate::radial::solve_radial(&params).unwrap();
        let r_max = profile.r_max();
        let a = profile.a_est();
        assert!(r_max < a);

        // Between r_max and a: inside the manifold, outside computed data.
        let mid = 0.5 * (r_max + a);
        let x = DVector::from_vec(vec![mid, 0.0]);
        assert!(matches!(
            potential(&profile, &x),
            Err(GeometryError::OutsideComputedDomain { .. })
        ));

        let x = DVector::from_vec(vec![a * 1.01, 0.0]);
        assert!(matches!(
            potential(&profile, &x),
            Err(GeometryError::OutsideManifold { .. })
        ));
    }

    #[test]
    fn flat_potential_monge_ampere_residual_is_r_squared_halves() {
        // Y = r^2/2 has Hess f = I, so |log det - f| = r^2/2: the control
        // keeps the residual visibly nonzero.
        let pot = synthetic::FlatPotential::new(3, 0.5, 10.0);
        let x = DVector::from_vec(vec![0.6, 0.0, 0.8]);
        let res = monge_ampere_residual(&pot, &x).unwrap();
        assert!((res - 0.5).abs() < 1e-12, "residual {res}");
    }
}
