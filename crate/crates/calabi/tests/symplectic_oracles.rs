//! Certificates for the gradient-map symplectomorphism: exact and
//! finite-difference pullback of the standard form, inverse roundtrips,
//! injectivity, volume transport, and properness.

use std::sync::OnceLock;

use calabi::symplectic::{
    phi, phi_inverse, phi_jacobian, properness_table, pullback_residual_analytic,
    pullback_residual_fd, MapError,
};
use calabi::{
    solve_radial, tolerances, ImagePoint, PotentialParams, RadialPotential, RadialProfile,
    TubePoint,
};
use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn profile_2_0() -> &'static RadialProfile {
    static P: OnceLock<RadialProfile> = OnceLock::new();
    P.get_or_init(|| solve_radial(&PotentialParams::new(2, 0.0)).unwrap())
}

fn random_tube_point(rng: &mut ChaCha12Rng, n: usize, radius: f64) -> TubePoint {
    let x = loop {
        let x = DVector::from_fn(n, |_, _| rng.gen_range(-radius..radius));
        if x.norm() < radius {
            break x;
        }
    };
    let y = DVector::from_fn(n, |_, _| rng.gen_range(-2.0..2.0));
    TubePoint::new(x, y)
}

#[test]
fn analytic_pullback_is_exactly_zero() {
    let p = profile_2_0();
    let mut rng = ChaCha12Rng::seed_from_u64(21);
    for _ in 0..50 {
        let z = random_tube_point(&mut rng, 2, 0.6 * p.r_max());
        let res = pullback_residual_analytic(p, &z).unwrap();
        assert_eq!(res.to_bits(), 0.0f64.to_bits(), "residual {res:e}");
    }
}

#[test]
fn fd_pullback_is_second_order() {
    let p = profile_2_0();
    let z = TubePoint::new(
        DVector::from_vec(vec![0.7, -0.4]),
        DVector::from_vec(vec![0.2, 1.1]),
    );
    let r1 = pullback_residual_fd(p, &z, 4e-4).unwrap();
    let r2 = pullback_residual_fd(p, &z, 2e-4).unwrap();
    let ratio = r1 / r2;
    assert!(
        (3.0..=5.0).contains(&ratio),
        "pullback FD ratio {ratio:.3} not second order"
    );
    assert!(pullback_residual_fd(p, &z, 1e-4).unwrap() <= tolerances::PULLBACK_FD);
}

#[test]
fn roundtrip_recovers_points() {
    let p = profile_2_0();
    let mut rng = ChaCha12Rng::seed_from_u64(22);
    for _ in 0..100 {
        let z = random_tube_point(&mut rng, 2, 0.8 * p.r_max());
        let w = phi(p, &z).unwrap();
        let back = phi_inverse(p, &w).unwrap();
        let dev = (&back.x - &z.x).amax();
        assert!(dev <= tolerances::ROUNDTRIP, "roundtrip dev {dev:.3e}");
        // The fiber coordinates pass through untouched.
        for i in 0..2 {
            assert_eq!(back.y[i].to_bits(), z.y[i].to_bits());
            assert_eq!(w.v[i].to_bits(), z.y[i].to_bits());
        }
    }
}

#[test]
fn center_maps_to_center() {
    let p = profile_2_0();
    let z = TubePoint::new(DVector::zeros(2), DVector::from_vec(vec![1.0, -2.0]));
    let w = phi(p, &z).unwrap();
    assert_eq!(w.u, DVector::zeros(2));
    let back = phi_inverse(p, &w).unwrap();
    assert_eq!(back.x, DVector::zeros(2));
}

#[test]
fn map_is_injective_with_gradient_lower_bound() {
    // Convexity gives <grad f(x1) - grad f(x2), x1 - x2> >= b |x1 - x2|^2
    // with b = Y''(0), hence |u1 - u2| >= b |x1 - x2|.
    let p = profile_2_0();
    let b = p.eval(0.0).unwrap().2;
    let mut rng = ChaCha12Rng::seed_from_u64(23);
    for _ in 0..100 {
        let z1 = random_tube_point(&mut rng, 2, 0.8 * p.r_max());
        let z2 = random_tube_point(&mut rng, 2, 0.8 * p.r_max());
        let w1 = phi(p, &z1).unwrap();
        let w2 = phi(p, &z2).unwrap();
        let dx = (&z1.x - &z2.x).norm();
        let du = (&w1.u - &w2.u).norm();
        assert!(
            du >= 0.99 * b * dx,
            "gradient gap {du:.3e} below monotonicity bound {:.3e}",
            b * dx
        );
    }
}

#[test]
fn jacobian_determinant_transports_volume() {
    // det DPhi = det Hess f = e^f.
    let p = profile_2_0();
    let mut rng = ChaCha12Rng::seed_from_u64(24);
    for _ in 0..25 {
        let z = random_tube_point(&mut rng, 2, 0.8 * p.r_max());
        let j = phi_jacobian(p, &z).unwrap();
        let det = j.lu().determinant();
        let ef = calabi::geometry::potential(p, &z.x).unwrap().exp();
        assert!(
            (det - ef).abs() / ef < 1e-12,
            "volume factor dev {:.3e}",
            (det - ef).abs() / ef
        );
    }
}

#[test]
fn image_beyond_profile_is_an_error() {
    let p = profile_2_0();
    let yp_max = p.eval(p.r_max()).unwrap().1;
    let w = ImagePoint::new(
        DVector::from_vec(vec![1.5 * yp_max, 0.0]),
        DVector::zeros(2),
    );
    assert!(matches!(
        phi_inverse(p, &w),
        Err(MapError::ImageBeyondProfile { .. })
    ));
}

#[test]
fn inverse_reaches_the_outer_edge() {
    // Image norms right at the largest computed gradient must still invert.
    let p = profile_2_0();
    let yp_max = p.eval(p.r_max()).unwrap().1;
    let w = ImagePoint::new(
        DVector::from_vec(vec![yp_max, 0.0]),
        DVector::zeros(2),
    );
    let z = phi_inverse(p, &w).unwrap();
    assert!((z.x.norm() - p.r_max()).abs() < 1e-9 * p.r_max());
}

#[test]
fn properness_table_grows_to_threshold() {
    let p = profile_2_0();
    let fractions = [0.1, 0.25, 0.5, 0.75, 0.9, 0.99, 0.999, 1.0 - 1e-9];
    let table = properness_table(p, &fractions).unwrap();
    assert_eq!(table.len(), fractions.len());
    for w in table.windows(2) {
        assert!(w[1].1 > w[0].1, "gradient norm must grow with the radius");
    }
    let final_norm = table.last().unwrap().1;
    let threshold = p.params().blowup_threshold;
    let tracking = (final_norm / threshold).max(threshold / final_norm);
    assert!(
        tracking <= tolerances::PROPERNESS_TRACKING_FACTOR,
        "final gradient norm {final_norm:.3e} vs threshold {threshold:.3e}"
    );
}

#[test]
fn properness_fractions_are_validated() {
    let p = profile_2_0();
    assert!(matches!(
        properness_table(p, &[0.5, 1.5]),
        Err(MapError::InvalidFraction { value }) if value == 1.5
    ));
    assert!(matches!(
        properness_table(p, &[0.0]),
        Err(MapError::InvalidFraction { .. })
    ));
}

#[test]
fn fiber_dimension_is_checked() {
    let p = profile_2_0();
    let z = TubePoint::new(DVector::zeros(2), DVector::zeros(3));
    assert!(matches!(
        phi(p, &z),
        Err(MapError::FiberDimensionMismatch { expected: 2, got: 3 })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn roundtrip_property(
        xs in prop::array::uniform2(-1.4..1.4f64),
        ys in prop::array::uniform2(-3.0..3.0f64),
    ) {
        let p = profile_2_0();
        let x = DVector::from_vec(xs.to_vec());
        prop_assume!(x.norm() < 0.8 * p.r_max());
        let z = TubePoint::new(x, DVector::from_vec(ys.to_vec()));
        let w = phi(p, &z).unwrap();
        let back = phi_inverse(p, &w).unwrap();
        prop_assert!((&back.x - &z.x).amax() <= tolerances::ROUNDTRIP);
    }

    #[test]
    fn pullback_property(
        xs in prop::array::uniform2(-1.1..1.1f64),
        ys in prop::array::uniform2(-3.0..3.0f64),
    ) {
        let p = profile_2_0();
        let x = DVector::from_vec(xs.to_vec());
        prop_assume!(x.norm() < 0.6 * p.r_max());
        let z = TubePoint::new(x, DVector::from_vec(ys.to_vec()));
        prop_assert_eq!(pullback_residual_analytic(p, &z).unwrap(), 0.0);
    }
}
