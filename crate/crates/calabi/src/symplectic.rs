//! The global symplectomorphism `Phi(x, y) = (grad f(x), y)` from the tube
//! domain onto its image with the standard symplectic form, its Jacobian,
//! pullback residuals (exact and finite-difference), the inverse map, and the
//! properness table that witnesses `|grad f| -> infinity` at the boundary.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::geometry::{self, GeometryError};
use crate::radial::{RadialError, RadialPotential};

const INVERSE_MAX_ITERATIONS: usize = 200;

/// Point of the tube domain: spatial part `x` with `|x|` inside the profile,
/// fiber part `y` unconstrained.
#[derive(Debug, Clone, PartialEq)]
pub struct TubePoint {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
}

impl TubePoint {
    pub fn new(x: DVector<f64>, y: DVector<f64>) -> Self {
        Self { x, y }
    }
}

/// Image point `(u, v) = (grad f(x), y)` carrying the standard symplectic
/// structure.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePoint {
    pub u: DVector<f64>,
    pub v: DVector<f64>,
}

impl ImagePoint {
    pub fn new(u: DVector<f64>, v: DVector<f64>) -> Self {
        Self { u, v }
    }
}

#[derive(Debug, Error)]
pub enum MapError {
    #[error("image norm {norm:.6} exceeds the largest computed gradient norm {max_norm:.6}; re-solve with a higher blow-up threshold to extend the computed domain")]
    ImageBeyondProfile { norm: f64, max_norm: f64 },
    #[error("inverse iteration did not converge for image norm {norm:.6e} after {iterations} iterations")]
    InverseDiverged { norm: f64, iterations: usize },
    #[error("properness fraction {value} outside (0, 1]")]
    InvalidFraction { value: f64 },
    #[error("fiber parts must have dimension {expected}, got {got}")]
    FiberDimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Radial(#[from] RadialError),
}

fn check_fiber<P: RadialPotential>(pot: &P, y: &DVector<f64>) -> Result<(), MapError> {
    let n = pot.dim() as usize;
    if y.len() != n {
        return Err(MapError::FiberDimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    Ok(())
}

/// `Phi(x, y) = (grad f(x), y)`. The fiber part is carried over bit for bit.
pub fn phi<P: RadialPotential>(pot: &P, z: &TubePoint) -> Result<ImagePoint, MapError> {
    check_fiber(pot, &z.y)?;
    let u = geometry::grad_potential(pot, &z.x)?;
    Ok(ImagePoint {
        u,
        v: z.y.clone(),
    })
}

/// Jacobian of `Phi` at `z`: the block matrix `[[Hess f, 0], [0, I]]`.
pub fn phi_jacobian<P: RadialPotential>(pot: &P, z: &TubePoint) -> Result<DMatrix<f64>, MapError> {
    check_fiber(pot, &z.y)?;
    let h = geometry::hess_potential(pot, &z.x)?;
    let n = h.nrows();
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for k in 0..n {
            j[(i, k)] = h[(i, k)];
        }
        j[(n + i, n + i)] = 1.0;
    }
    Ok(j)
}

/// Standard symplectic form `[[0, I], [-I, 0]]` on `R^{2n}`.
fn standard_form(n: usize) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        w[(i, n + i)] = 1.0;
        w[(n + i, i)] = -1.0;
    }
    w
}

fn pullback_defect(j: &DMatrix<f64>, omega_src: &DMatrix<f64>) -> f64 {
    let n = j.nrows() / 2;
    let w0 = standard_form(n);
    (j.transpose() * w0 * j - omega_src).abs().max()
}

/// `|| J^T Omega_0 J - Omega ||_inf` with the analytic Jacobian. The block
/// structure of `J` makes every entry of the pullback an exact copy of an
/// entry of `Omega`, so the residual is exactly zero in floating point.
pub fn pullback_residual_analytic<P: RadialPotential>(
    pot: &P,
    z: &TubePoint,
) -> Result<f64, MapError> {
    let j = phi_jacobian(pot, z)?;
    let omega = geometry::assemble(pot, &z.x)?.omega;
    Ok(pullback_defect(&j, &omega))
}

/// `|| J_fd^T Omega_0 J_fd - Omega ||_inf` with a central-difference Jacobian
/// of step `h`: an independent route that converges at O(h^2) instead of
/// vanishing identically.
pub fn pullback_residual_fd<P: RadialPotential>(
    pot: &P,
    z: &TubePoint,
    h: f64,
) -> Result<f64, MapError> {
    check_fiber(pot, &z.y)?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(GeometryError::InvalidStep { h }.into());
    }
    let n = pot.dim() as usize;
    let r = z.x.norm();
    if r + h > pot.r_max() {
        return Err(GeometryError::StencilOutOfDomain {
            r,
            half_width: h,
            r_max: pot.r_max(),
        }
        .into());
    }

    let map = |w: &DVector<f64>| -> Result<DVector<f64>, MapError> {
        let x = w.rows(0, n).into_owned();
        let g = geometry::grad_potential(pot, &x)?;
        let mut out = DVector::zeros(2 * n);
        for i in 0..n {
            out[i] = g[i];
            out[n + i] = w[n + i];
        }
        Ok(out)
    };

    let mut w = DVector::zeros(2 * n);
    for i in 0..n {
        w[i] = z.x[i];
        w[n + i] = z.y[i];
    }
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..2 * n {
        let mut up = w.clone();
        let mut dn = w.clone();
        up[k] += h;
        dn[k] -= h;
        let col = (map(&up)? - map(&dn)?) / (2.0 * h);
        j.set_column(k, &col);
    }
    let omega = geometry::assemble(pot, &z.x)?.omega;
    Ok(pullback_defect(&j, &omega))
}

/// Inverse of `Phi`: finds the radius `rho` with `Y'(rho) = |u|` by a
/// bracketed Newton iteration on `[0, r_max]` (monotonicity of `Y'` keeps the
/// root bracketed; steps leaving the bracket fall back to bisection), then
/// rescales `u` back onto the sphere of radius `rho`.
pub fn phi_inverse<P: RadialPotential>(pot: &P, w: &ImagePoint) -> Result<TubePoint, MapError> {
    check_fiber(pot, &w.v)?;
    let n = pot.dim() as usize;
    if w.u.len() != n {
        return Err(MapError::FiberDimensionMismatch {
            expected: n,
            got: w.u.len(),
        });
    }
    let norm = w.u.norm();
    if norm == 0.0 {
        return Ok(TubePoint {
            x: DVector::zeros(n),
            y: w.v.clone(),
        });
    }
    let r_max = pot.r_max();
    let yp_max = pot.eval(r_max)?.1;
    if norm > yp_max {
        return Err(MapError::ImageBeyondProfile {
            norm,
            max_norm: yp_max,
        });
    }

    let b = pot.eval(0.0)?.2;
    let mut lo = 0.0_f64;
    let mut hi = r_max;
    // Y' is convex near the center and Y'(rho) >= b rho, so norm / b
    // overshoots the root slightly; clamp into the bracket.
    let mut rho = (norm / b).min(0.5 * (lo + hi)).max(f64::MIN_POSITIVE);
    for _ in 0..INVERSE_MAX_ITERATIONS {
        let (_, yp, ypp) = pot.eval(rho)?;
        let fv = yp - norm;
        if fv == 0.0 {
            return Ok(point_at_radius(&w.u, &w.v, rho, norm));
        }
        if fv > 0.0 {
            hi = rho;
        } else {
            lo = rho;
        }
        let mut next = rho - fv / ypp;
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        if (next - rho).abs() <= 1e-15 * rho.max(1e-12) || hi - lo <= f64::EPSILON * hi {
            return Ok(point_at_radius(&w.u, &w.v, next, norm));
        }
        rho = next;
    }
    Err(MapError::InverseDiverged {
        norm,
        iterations: INVERSE_MAX_ITERATIONS,
    })
}

fn point_at_radius(u: &DVector<f64>, v: &DVector<f64>, rho: f64, norm: f64) -> TubePoint {
    TubePoint {
        x: u * (rho / norm),
        y: v.clone(),
    }
}

/// Rows `(r, |grad f|(r))` at `r = fraction * r_max`. Strict growth of the
/// second column along increasing fractions witnesses properness; fractions
/// must lie in `(0, 1]`.
pub fn properness_table<P: RadialPotential>(
    pot: &P,
    fractions: &[f64],
) -> Result<Vec<(f64, f64)>, MapError> {
    let mut rows = Vec::with_capacity(fractions.len());
    for &frac in fractions {
        if !(frac > 0.0 && frac <= 1.0) {
            return Err(MapError::InvalidFraction { value: frac });
        }
        let r = frac * pot.r_max();
        let (_, yp, _) = pot.eval(r)?;
        rows.push((r, yp));
    }
    Ok(rows)
}
