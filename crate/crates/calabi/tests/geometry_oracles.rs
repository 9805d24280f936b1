//! Geometry certificates against independent oracles: finite-difference
//! derivative checks, the spectral structure of the Hessian, closed-form
//! curvature controls (round sphere, conformal metrics, flat metrics), and
//! the behavior of the Monge-Ampere / Einstein residuals on potentials that
//! do and do not solve the equation.

use std::sync::OnceLock;

use calabi::geometry::synthetic::{FlatPotential, QuarticPotential};
use calabi::geometry::{
    self, curvature_scan, sectional_curvature, sectional_curvature_from_metric, GeometryError,
    HistogramConfig, ScanConfig,
};
use calabi::{solve_radial, tolerances, PotentialParams, RadialPotential, RadialProfile};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn profile_3_0() -> &'static RadialProfile {
    static P: OnceLock<RadialProfile> = OnceLock::new();
    P.get_or_init(|| solve_radial(&PotentialParams::new(3, 0.0)).unwrap())
}

fn profile_2_0() -> &'static RadialProfile {
    static P: OnceLock<RadialProfile> = OnceLock::new();
    P.get_or_init(|| solve_radial(&PotentialParams::new(2, 0.0)).unwrap())
}

fn random_point(rng: &mut ChaCha12Rng, dim: usize, radius: f64) -> DVector<f64> {
    loop {
        let x = DVector::from_fn(dim, |_, _| rng.gen_range(-radius..radius));
        if x.norm() < radius && x.norm() > 1e-3 {
            return x;
        }
    }
}

fn random_rotation(rng: &mut ChaCha12Rng, dim: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0));
    m.qr().q()
}

#[test]
fn gradient_matches_finite_differences() {
    let p = profile_3_0();
    let mut rng = ChaCha12Rng::seed_from_u64(11);
    let h = 1e-5;
    for _ in 0..20 {
        let x = random_point(&mut rng, 3, 0.8 * p.r_max());
        let g = geometry::grad_potential(p, &x).unwrap();
        for i in 0..3 {
            let mut up = x.clone();
            let mut dn = x.clone();
            up[i] += h;
            dn[i] -= h;
            let fd = (geometry::potential(p, &up).unwrap()
                - geometry::potential(p, &dn).unwrap())
                / (2.0 * h);
            assert!(
                (fd - g[i]).abs() < 1e-7,
                "grad component {i} dev {:.3e}",
                (fd - g[i]).abs()
            );
        }
    }
}

#[test]
fn hessian_matches_finite_differences() {
    let p = profile_3_0();
    let mut rng = ChaCha12Rng::seed_from_u64(12);
    let h = 1e-5;
    for _ in 0..10 {
        let x = random_point(&mut rng, 3, 0.8 * p.r_max());
        let hess = geometry::hess_potential(p, &x).unwrap();
        for i in 0..3 {
            let mut up = x.clone();
            let mut dn = x.clone();
            up[i] += h;
            dn[i] -= h;
            let gu = geometry::grad_potential(p, &up).unwrap();
            let gd = geometry::grad_potential(p, &dn).unwrap();
            for j in 0..3 {
                let fd = (gu[j] - gd[j]) / (2.0 * h);
                assert!(
                    (fd - hess[(i, j)]).abs() < 1e-6,
                    "hess ({i},{j}) dev {:.3e}",
                    (fd - hess[(i, j)]).abs()
                );
            }
        }
    }
}

#[test]
fn hessian_spectrum_is_radial_and_tangential() {
    // Eigenvalues must be Y'' (radial line) and Y'/r with multiplicity n-1.
    let p = profile_3_0();
    let mut rng = ChaCha12Rng::seed_from_u64(13);
    for _ in 0..10 {
        let x = random_point(&mut rng, 3, 0.8 * p.r_max());
        let r = x.norm();
        let (_, yp, ypp) = p.eval(r).unwrap();
        let hess = geometry::hess_potential(p, &x).unwrap();
        let mut eigs: Vec<f64> = hess.symmetric_eigen().eigenvalues.iter().copied().collect();
        eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut expected = [yp / r, yp / r, ypp];
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (e, x) in eigs.iter().zip(expected.iter()) {
            assert!((e - x).abs() < 1e-9, "eigenvalue dev {:.3e}", (e - x).abs());
        }
    }
}

#[test]
fn hessian_at_center_is_scalar() {
    let p = profile_2_0();
    let b = p.eval(0.0).unwrap().2;
    let h = geometry::hess_potential(p, &DVector::zeros(2)).unwrap();
    assert_eq!(h[(0, 0)].to_bits(), b.to_bits());
    assert_eq!(h[(1, 1)].to_bits(), b.to_bits());
    assert_eq!(h[(0, 1)], 0.0);
}

#[test]
fn geometry_is_rotation_equivariant() {
    let p = profile_3_0();
    let mut rng = ChaCha12Rng::seed_from_u64(14);
    for _ in 0..10 {
        let x = random_point(&mut rng, 3, 0.8 * p.r_max());
        let q = random_rotation(&mut rng, 3);
        let xq = &q * &x;

        let f = geometry::potential(p, &x).unwrap();
        let fq = geometry::potential(p, &xq).unwrap();
        assert!((f - fq).abs() < 1e-10, "potential shift {:.3e}", (f - fq).abs());

        let h = geometry::hess_potential(p, &x).unwrap();
        let hq = geometry::hess_potential(p, &xq).unwrap();
        let transported = &q * h * q.transpose();
        assert!(
            (hq - transported).abs().max() < 1e-12,
            "Hessian equivariance violated"
        );
    }
}

#[test]
fn monge_ampere_residual_separates_solutions_from_controls() {
    let p = profile_2_0();
    let mut rng = ChaCha12Rng::seed_from_u64(15);
    for _ in 0..50 {
        let x = random_point(&mut rng, 2, 0.9 * p.r_max());
        let res = geometry::monge_ampere_residual(p, &x).unwrap();
        assert!(res <= tolerances::MONGE_AMPERE, "residual {res:.3e}");
    }
    // The control potential is strictly convex but solves a different
    // equation, so the same residual is O(1).
    let quartic = QuarticPotential::new(2, 4.0);
    let x = DVector::from_vec(vec![0.5, 0.3]);
    assert!(geometry::monge_ampere_residual(&quartic, &x).unwrap() > 0.1);
}

#[test]
fn einstein_residual_vanishes_at_second_order_only_for_solutions() {
    let p = profile_2_0();
    for xs in [[0.3, 0.1], [1.0, -0.7], [1.9, 0.4]] {
        let x = DVector::from_vec(xs.to_vec());
        let r1 = geometry::einstein_residual(p, &x, 2e-3).unwrap();
        let r2 = geometry::einstein_residual(p, &x, 1e-3).unwrap();
        let ratio = r1 / r2;
        assert!(
            (3.5..=4.5).contains(&ratio),
            "x={xs:?}: ratio {ratio:.3} outside the second-order window"
        );
    }

    // Flat control: FD Hessian of the constant log det vanishes exactly, so
    // the residual equals the largest Hessian entry.
    let flat = FlatPotential::new(2, 0.5, 4.0);
    let x = DVector::from_vec(vec![0.4, -0.2]);
    let res = geometry::einstein_residual(&flat, &x, 1e-3).unwrap();
    assert_eq!(res, 1.0);

    // Quartic control: the residual converges to a genuinely nonzero
    // obstruction instead of decaying with the step.
    let quartic = QuarticPotential::new(3, 4.0);
    let xq = DVector::from_vec(vec![0.5, 0.3, -0.2]);
    let q1 = geometry::einstein_residual(&quartic, &xq, 2e-3).unwrap();
    let q2 = geometry::einstein_residual(&quartic, &xq, 1e-3).unwrap();
    assert!(q1 > 1.0 && q2 > 1.0);
    assert!((q1 / q2 - 1.0).abs() < 0.01, "obstruction should not decay");
}

#[test]
fn einstein_stencil_domain_is_checked() {
    let p = profile_2_0();
    let x = DVector::from_vec(vec![p.r_max() - 1e-4, 0.0]);
    assert!(matches!(
        geometry::einstein_residual(p, &x, 2e-3),
        Err(GeometryError::StencilOutOfDomain { .. })
    ));
}

#[test]
fn sphere_curvature_is_plus_one() {
    // Stereographic metric 4/(1+|x|^2)^2 I of the round unit sphere.
    let sphere = |x: &DVector<f64>| -> Result<DMatrix<f64>, GeometryError> {
        let s = 4.0 / (1.0 + x.norm_squared()).powi(2);
        Ok(DMatrix::identity(2, 2) * s)
    };
    let mut rng = ChaCha12Rng::seed_from_u64(16);
    for _ in 0..10 {
        let p = random_point(&mut rng, 2, 0.8);
        let u = DVector::from_fn(2, |_, _| rng.gen_range(-1.0..1.0f64));
        let v = DVector::from_fn(2, |_, _| rng.gen_range(-1.0..1.0f64));
        if (u[0] * v[1] - u[1] * v[0]).abs() < 0.1 {
            continue;
        }
        let k = sectional_curvature_from_metric(&sphere, &p, &u, &v, 1e-3).unwrap();
        assert!((k - 1.0).abs() < 1e-5, "K = {k:.9}");
    }
}

#[test]
fn conformal_curvature_matches_closed_form() {
    // g = e^{2 phi} I with phi = alpha x1^2 has K = -2 alpha e^{-2 phi}.
    let alpha = 0.35;
    let conf = move |x: &DVector<f64>| -> Result<DMatrix<f64>, GeometryError> {
        Ok(DMatrix::identity(2, 2) * (2.0 * alpha * x[0] * x[0]).exp())
    };
    for p in [[0.4, 1.1], [-0.8, 0.2], [0.0, 0.0]] {
        let p = DVector::from_vec(p.to_vec());
        let u = DVector::from_vec(vec![0.6, -0.1]);
        let v = DVector::from_vec(vec![0.2, 0.8]);
        let k = sectional_curvature_from_metric(&conf, &p, &u, &v, 1e-3).unwrap();
        let exact = -2.0 * alpha * (-2.0 * alpha * p[0] * p[0]).exp();
        assert!((k - exact).abs() < 1e-5, "K = {k:.9}, exact {exact:.9}");
    }
}

#[test]
fn constant_metric_curvature_is_exactly_zero() {
    // All difference quotients of a constant metric vanish identically, so
    // the curvature is bitwise zero, not merely small.
    let flat = |_: &DVector<f64>| -> Result<DMatrix<f64>, GeometryError> {
        Ok(DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0, 5.0])))
    };
    let p = DVector::from_vec(vec![0.3, -0.5, 0.7]);
    let u = DVector::from_vec(vec![1.0, 0.4, -0.2]);
    let v = DVector::from_vec(vec![-0.3, 0.9, 0.5]);
    let k = sectional_curvature_from_metric(&flat, &p, &u, &v, 1e-3).unwrap();
    assert_eq!(k.to_bits(), 0.0f64.to_bits());

    let flat_pot = FlatPotential::new(2, 0.5, 6.0);
    let p4 = DVector::from_vec(vec![0.3, -0.5, 0.7, 0.1]);
    let u4 = DVector::from_vec(vec![1.0, 0.4, -0.2, 0.6]);
    let v4 = DVector::from_vec(vec![-0.3, 0.9, 0.5, 0.2]);
    let k4 = sectional_curvature(&flat_pot, &p4, &u4, &v4, 1e-3).unwrap();
    assert!(k4.abs() <= tolerances::FLAT_CURVATURE);
    assert_eq!(k4.to_bits(), 0.0f64.to_bits());
}

#[test]
fn plane_swap_is_bitwise_symmetric() {
    let prof = profile_2_0();
    let mut rng = ChaCha12Rng::seed_from_u64(17);
    for _ in 0..10 {
        let p = DVector::from_fn(4, |_, _| rng.gen_range(-0.8..0.8));
        let u = DVector::from_fn(4, |_, _| rng.gen_range(-1.0..1.0));
        let v = DVector::from_fn(4, |_, _| rng.gen_range(-1.0..1.0));
        let kuv = sectional_curvature(prof, &p, &u, &v, 1e-3).unwrap();
        let kvu = sectional_curvature(prof, &p, &v, &u, 1e-3).unwrap();
        assert_eq!(kuv.to_bits(), kvu.to_bits());
    }
}

#[test]
fn degenerate_planes_are_rejected() {
    let prof = profile_2_0();
    let p = DVector::from_vec(vec![0.5, 0.2, 0.0, -0.3]);
    let u = DVector::from_vec(vec![1.0, 0.4, -0.2, 0.6]);
    let v = &u * 2.0;
    assert!(matches!(
        sectional_curvature(prof, &p, &u, &v, 1e-3),
        Err(GeometryError::DegeneratePlane { .. })
    ));
}

#[test]
fn curvature_scan_is_deterministic() {
    let prof = profile_2_0();
    let config = ScanConfig {
        seed: 42,
        samples: 24,
        radius: 0.5 * prof.r_max(),
        step: 1e-3,
        histogram: HistogramConfig::default(),
    };
    let a = curvature_scan(prof, &config).unwrap();
    let b = curvature_scan(prof, &config).unwrap();
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );

    let other = curvature_scan(
        prof,
        &ScanConfig {
            seed: 43,
            ..config.clone()
        },
    )
    .unwrap();
    assert_ne!(a.samples[0].k.to_bits(), other.samples[0].k.to_bits());

    let total: u64 = a.histogram.counts.iter().sum::<u64>()
        + a.histogram.underflow
        + a.histogram.overflow;
    assert_eq!(total, config.samples as u64);
    assert_eq!(a.samples.len(), config.samples);
    assert!(a.summary.min <= a.summary.mean && a.summary.mean <= a.summary.max);
    assert!(a.samples.iter().all(|s| s.k.is_finite()));
}

#[test]
fn curvature_scan_validates_config() {
    let prof = profile_2_0();
    let base = ScanConfig {
        seed: 1,
        samples: 4,
        radius: 0.5 * prof.r_max(),
        step: 1e-3,
        histogram: HistogramConfig::default(),
    };
    assert!(matches!(
        curvature_scan(prof, &ScanConfig { samples: 0, ..base.clone() }),
        Err(GeometryError::InvalidScanConfig { .. })
    ));
    assert!(matches!(
        curvature_scan(prof, &ScanConfig { radius: prof.r_max(), ..base.clone() }),
        Err(GeometryError::ScanRadiusOutOfRange { .. })
    ));
    assert!(matches!(
        curvature_scan(prof, &ScanConfig { step: 0.0, ..base.clone() }),
        Err(GeometryError::InvalidScanConfig { .. })
    ));
    assert!(matches!(
        curvature_scan(
            prof,
            &ScanConfig {
                histogram: HistogramConfig { bins: 0, lo: -1.0, hi: 1.0 },
                ..base
            }
        ),
        Err(GeometryError::InvalidScanConfig { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn metric_is_positive_definite(
        c in prop::array::uniform3(-1.2..1.2f64),
    ) {
        let p = profile_3_0();
        let x = DVector::from_vec(c.to_vec());
        prop_assume!(x.norm() > 1e-6);
        let h = geometry::hess_potential(p, &x).unwrap();
        prop_assert!(h.cholesky().is_some(), "Hessian not positive definite");
    }

    #[test]
    fn hessian_determinant_matches_potential(
        c in prop::array::uniform3(-1.2..1.2f64),
    ) {
        let p = profile_3_0();
        let x = DVector::from_vec(c.to_vec());
        prop_assume!(x.norm() > 1e-6);
        let h = geometry::hess_potential(p, &x).unwrap();
        let det = h.lu().determinant();
        let ef = geometry::potential(p, &x).unwrap().exp();
        prop_assert!((det - ef).abs() / ef < 1e-12);
    }
}
