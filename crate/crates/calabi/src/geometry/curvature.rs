//! Sectional curvature by central finite differences of the metric.
//!
//! The Riemann tensor is assembled from nested difference quotients of an
//! arbitrary metric field, so the same code path serves the tube metric and
//! the closed-form controls (round sphere, conformal factors, flat metrics)
//! whose curvature is known exactly.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use super::{matrices_from_hessian, GeometryError, PLANE_DEGENERACY_FLOOR};
use crate::radial::RadialPotential;
use crate::sampling;

/// Default stencil half-step for curvature differences. Small enough that the
/// O(h^2) truncation sits near 1e-6 for O(1) metric derivatives, large enough
/// that nested-difference roundoff (~eps/h^2) stays below it.
pub const DEFAULT_CURVATURE_STEP: f64 = 1e-3;

/// Christoffel symbols at `p`: `gamma[a][(b, c)]` is the coefficient of the
/// connection, symmetric in `(b, c)`.
fn christoffel<F>(
    metric: &F,
    p: &DVector<f64>,
    h: f64,
) -> Result<Vec<DMatrix<f64>>, GeometryError>
where
    F: Fn(&DVector<f64>) -> Result<DMatrix<f64>, GeometryError>,
{
    let d = p.len();
    let g0 = metric(p)?;
    let ginv = g0.try_inverse().ok_or(GeometryError::SingularMetric)?;
    let mut dg = Vec::with_capacity(d);
    for c in 0..d {
        let mut up = p.clone();
        let mut dn = p.clone();
        up[c] += h;
        dn[c] -= h;
        dg.push((metric(&up)? - metric(&dn)?) / (2.0 * h));
    }
    let mut gamma = vec![DMatrix::zeros(d, d); d];
    for a in 0..d {
        for b in 0..d {
            for c in b..d {
                let mut s = 0.0;
                for e in 0..d {
                    s += ginv[(a, e)] * (dg[b][(e, c)] + dg[c][(e, b)] - dg[e][(b, c)]);
                }
                let v = 0.5 * s;
                gamma[a][(b, c)] = v;
                gamma[a][(c, b)] = v;
            }
        }
    }
    Ok(gamma)
}

/// Fully lowered Riemann tensor at `p`, flattened as `[a, b, c, d]` with
/// stride `d` per index:
/// `R^a_{bcd} = d_c Gamma^a_{db} - d_d Gamma^a_{cb}
///  + Gamma^a_{ce} Gamma^e_{db} - Gamma^a_{de} Gamma^e_{cb}`,
/// then `R_{abcd} = g_{ae} R^e_{bcd}`.
fn riemann_lower<F>(metric: &F, p: &DVector<f64>, h: f64) -> Result<Vec<f64>, GeometryError>
where
    F: Fn(&DVector<f64>) -> Result<DMatrix<f64>, GeometryError>,
{
    let d = p.len();
    let g0 = metric(p)?;
    let gamma0 = christoffel(metric, p, h)?;
    let mut dgamma = Vec::with_capacity(d);
    for c in 0..d {
        let mut up = p.clone();
        let mut dn = p.clone();
        up[c] += h;
        dn[c] -= h;
        let gp = christoffel(metric, &up, h)?;
        let gm = christoffel(metric, &dn, h)?;
        let slice: Vec<DMatrix<f64>> =
            (0..d).map(|a| (&gp[a] - &gm[a]) / (2.0 * h)).collect();
        dgamma.push(slice);
    }

    let idx = |a: usize, b: usize, c: usize, e: usize| ((a * d + b) * d + c) * d + e;
    let mut upper = vec![0.0; d * d * d * d];
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                for dd in 0..d {
                    let mut v = dgamma[c][a][(dd, b)] - dgamma[dd][a][(c, b)];
                    for e in 0..d {
                        v += gamma0[a][(c, e)] * gamma0[e][(dd, b)]
                            - gamma0[a][(dd, e)] * gamma0[e][(c, b)];
                    }
                    upper[idx(a, b, c, dd)] = v;
                }
            }
        }
    }
    let mut lower = vec![0.0; d * d * d * d];
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                for dd in 0..d {
                    let mut v = 0.0;
                    for e in 0..d {
                        v += g0[(a, e)] * upper[idx(e, b, c, dd)];
                    }
                    lower[idx(a, b, c, dd)] = v;
                }
            }
        }
    }
    Ok(lower)
}

/// Sectional curvature of the plane spanned by `u` and `v` at `p` for an
/// arbitrary metric field. The contraction and the Gram denominator are both
/// written symmetrically in `(u, v)`, so swapping the two vectors returns a
/// bitwise identical result.
pub fn sectional_curvature_from_metric<F>(
    metric: &F,
    p: &DVector<f64>,
    u: &DVector<f64>,
    v: &DVector<f64>,
    h: f64,
) -> Result<f64, GeometryError>
where
    F: Fn(&DVector<f64>) -> Result<DMatrix<f64>, GeometryError>,
{
    let d = p.len();
    if u.len() != d {
        return Err(GeometryError::DimensionMismatch {
            expected: d,
            got: u.len(),
        });
    }
    if v.len() != d {
        return Err(GeometryError::DimensionMismatch {
            expected: d,
            got: v.len(),
        });
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(GeometryError::InvalidStep { h });
    }

    let g0 = metric(p)?;
    let gu = &g0 * u;
    let gv = &g0 * v;
    let nu = u.dot(&gu);
    let nv = v.dot(&gv);
    let ip_uv = u.dot(&gv);
    let ip_vu = v.dot(&gu);
    let den = nu * nv - ip_uv * ip_vu;
    let scale = nu * nv;
    let gram = if scale > 0.0 { den / scale } else { 0.0 };
    if !(gram > PLANE_DEGENERACY_FLOOR) {
        return Err(GeometryError::DegeneratePlane {
            gram,
            floor: PLANE_DEGENERACY_FLOOR,
        });
    }

    let rm = riemann_lower(metric, p, h)?;
    let idx = |a: usize, b: usize, c: usize, e: usize| ((a * d + b) * d + c) * d + e;
    let mut s_uv = 0.0;
    let mut s_vu = 0.0;
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                for e in 0..d {
                    let r = rm[idx(a, b, c, e)];
                    s_uv += r * u[a] * v[b] * u[c] * v[e];
                    s_vu += r * v[a] * u[b] * v[c] * u[e];
                }
            }
        }
    }
    Ok(0.5 * (s_uv + s_vu) / den)
}

/// Sectional curvature of the tube metric `G = diag(Hess f, Hess f)` at a
/// phase-space point `p = (x, y)` of dimension `2n`.
pub fn sectional_curvature<P: RadialPotential>(
    pot: &P,
    p: &DVector<f64>,
    u: &DVector<f64>,
    v: &DVector<f64>,
    h: f64,
) -> Result<f64, GeometryError> {
    let n = pot.dim() as usize;
    if p.len() != 2 * n {
        return Err(GeometryError::DimensionMismatch {
            expected: 2 * n,
            got: p.len(),
        });
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(GeometryError::InvalidStep { h });
    }
    let r = p.rows(0, n).norm();
    super::check_radius(pot, r)?;
    if r + 2.0 * h > pot.r_max() {
        return Err(GeometryError::StencilOutOfDomain {
            r,
            half_width: 2.0 * h,
            r_max: pot.r_max(),
        });
    }
    let metric = tube_metric(pot);
    sectional_curvature_from_metric(&metric, p, u, v, h)
}

/// Metric field of the tube: `G(x, y) = diag(H(x), H(x))`, independent of `y`.
pub(crate) fn tube_metric<P: RadialPotential>(
    pot: &P,
) -> impl Fn(&DVector<f64>) -> Result<DMatrix<f64>, GeometryError> + '_ {
    let n = pot.dim() as usize;
    move |q: &DVector<f64>| {
        let x = q.rows(0, n).into_owned();
        let h = super::hess_potential(pot, &x)?;
        Ok(matrices_from_hessian(&h).g)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HistogramConfig {
    pub bins: usize,
    pub lo: f64,
    pub hi: f64,
}

impl Default for HistogramConfig {
    fn default() -> Self {
        Self {
            bins: 40,
            lo: -2.0,
            hi: 2.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanConfig {
    pub seed: u64,
    pub samples: usize,
    /// Spatial sampling radius; must stay below `0.9 * r_max`.
    pub radius: f64,
    pub step: f64,
    pub histogram: HistogramConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvatureSample {
    pub base: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub k: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvatureSummary {
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

/// Result of a randomized sectional-curvature scan. Identical seeds and
/// configs produce bitwise identical scans.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvatureScan {
    pub dim: u32,
    pub config: ScanConfig,
    pub potential_fingerprint: String,
    pub samples: Vec<CurvatureSample>,
    pub summary: CurvatureSummary,
    pub histogram: Histogram,
}

/// Samples random phase-space points and random tangent planes (the second
/// leg orthogonalized against the first in the metric) and records the
/// sectional curvature of each.
pub fn curvature_scan<P: RadialPotential>(
    pot: &P,
    config: &ScanConfig,
) -> Result<CurvatureScan, GeometryError> {
    if config.samples == 0 {
        return Err(GeometryError::InvalidScanConfig {
            reason: "samples must be positive".into(),
        });
    }
    if config.histogram.bins == 0 {
        return Err(GeometryError::InvalidScanConfig {
            reason: "histogram needs at least one bin".into(),
        });
    }
    if !(config.histogram.lo < config.histogram.hi) {
        return Err(GeometryError::InvalidScanConfig {
            reason: "histogram range must satisfy lo < hi".into(),
        });
    }
    if !(config.step > 0.0 && config.step.is_finite()) {
        return Err(GeometryError::InvalidScanConfig {
            reason: format!("step {} must be positive and finite", config.step),
        });
    }
    let max_radius = 0.9 * pot.r_max();
    if !(config.radius >= 0.0 && config.radius < max_radius) {
        return Err(GeometryError::ScanRadiusOutOfRange {
            r: config.radius,
            max: max_radius,
        });
    }

    let n = pot.dim() as usize;
    let d = 2 * n;
    let metric = tube_metric(pot);
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);

    let mut samples = Vec::with_capacity(config.samples);
    let mut counts = vec![0u64; config.histogram.bins];
    let mut underflow = 0u64;
    let mut overflow = 0u64;
    let (mut k_min, mut k_max, mut k_sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);

    for index in 0..config.samples {
        let x = sampling::ball_point(&mut rng, n, config.radius);
        let y = sampling::ball_point(&mut rng, n, config.radius);
        let mut p = DVector::zeros(d);
        for i in 0..n {
            p[i] = x[i];
            p[n + i] = y[i];
        }

        let g0 = metric(&p)?;
        let u = sampling::unit_vector(&mut rng, d);
        let mut v = DVector::zeros(d);
        let mut ok = false;
        for _ in 0..32 {
            let cand = sampling::unit_vector(&mut rng, d);
            let gu = &g0 * &u;
            let proj = cand.dot(&gu) / u.dot(&gu);
            let orth = &cand - &u * proj;
            let rel = orth.dot(&(&g0 * &orth)) / cand.dot(&(&g0 * &cand));
            if rel > 1e-8 {
                v = orth;
                ok = true;
                break;
            }
        }
        if !ok {
            return Err(GeometryError::DegeneratePlane {
                gram: 0.0,
                floor: PLANE_DEGENERACY_FLOOR,
            });
        }

        let k = sectional_curvature_from_metric(&metric, &p, &u, &v, config.step)?;
        if !k.is_finite() {
            return Err(GeometryError::NonFiniteSample { index });
        }

        let hist = &config.histogram;
        if k < hist.lo {
            underflow += 1;
        } else if k >= hist.hi {
            overflow += 1;
        } else {
            let rel = (k - hist.lo) / (hist.hi - hist.lo);
            let bin = ((rel * hist.bins as f64) as usize).min(hist.bins - 1);
            counts[bin] += 1;
        }

        k_min = k_min.min(k);
        k_max = k_max.max(k);
        k_sum += k;

        samples.push(CurvatureSample {
            base: p.iter().copied().collect(),
            u: u.iter().copied().collect(),
            v: v.iter().copied().collect(),
            k,
        });
    }

    Ok(CurvatureScan {
        dim: d as u32,
        config: config.clone(),
        potential_fingerprint: pot.fingerprint(),
        samples,
        summary: CurvatureSummary {
            count: config.samples,
            min: k_min,
            max: k_max,
            mean: k_sum / config.samples as f64,
        },
        histogram: Histogram {
            lo: config.histogram.lo,
            hi: config.histogram.hi,
            counts,
            underflow,
            overflow,
        },
    })
}
