//! Property tests over random configurations and velocities.

use approx::assert_relative_eq;
use convex_scatter::geometry::{closest_approach, collision_frame, Beta};
use convex_scatter::invariants::{canonical_inverse, canonical_map, energy_momentum, span_rank};
use convex_scatter::scattering::{
    almost_physical, classify, collision_normal, disk_block_matrix, general_family, physical_scattering, Classification, MassInertia,
};
use convex_scatter::dynamics::{conserved_quantities, free_flight, SystemState};
use convex_scatter::{e, perp, rotate, ReferenceParticle, Vec2, Vec6};
use proptest::prelude::*;
use std::f64::consts::TAU;

fn ellipse() -> ReferenceParticle {
    ReferenceParticle::ellipse(2.0, 1.0).unwrap()
}

fn angle() -> impl Strategy<Value = f64> {
    0.0..TAU
}

fn velocity() -> impl Strategy<Value = Vec6> {
    prop::array::uniform6(-2.0..2.0f64).prop_map(Vec6::from)
}

fn momentum_energy(v: &Vec6, mi: &MassInertia) -> (Vec2, f64) {
    let p = mi.m * Vec2::new(v[0] + v[2], v[1] + v[3]);
    (p, mi.apply(v).norm_squared())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn frame_invariants(t in angle(), tb in angle(), psi in angle()) {
        let f = collision_frame(&ellipse(), Beta::new(t, tb, psi)).unwrap();
        prop_assert!((f.n.norm() - 1.0).abs() < 1e-12);
        prop_assert!((f.n_excl.norm() - 1.0).abs() < 1e-12);
        prop_assert!((f.q - (f.p - f.d * e(psi))).norm() < 1e-12);
        prop_assert!((f.d * perp(&e(psi)).dot(&f.n_tilde) + f.dd_dpsi).abs() < 1e-6);
        prop_assert!((f.n - f.n_excl).norm() < 1e-9);
    }

    #[test]
    fn rotation_covariance(t in angle(), tb in angle(), psi in angle(), delta in angle()) {
        let p = ellipse();
        let a = collision_frame(&p, Beta::new(t, tb, psi)).unwrap();
        let b = collision_frame(&p, Beta::new(t + delta, tb + delta, psi + delta)).unwrap();
        prop_assert!((a.d - b.d).abs() < 1e-8);
        prop_assert!((rotate(delta, &a.p) - b.p).norm() < 1e-8);
        prop_assert!((rotate(delta, &a.n_excl) - b.n_excl).norm() < 1e-8);
        prop_assert!((rotate(delta, &a.r) - b.r).norm() < 1e-8);
    }

    #[test]
    fn reflection_symmetry_of_d(theta in angle(), psi in angle()) {
        let p = ellipse();
        let a = closest_approach(&p, theta, psi).unwrap().d;
        let b = closest_approach(&p, TAU - theta, TAU - psi).unwrap().d;
        prop_assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn disk_frames(t in angle(), tb in angle(), psi in angle(), v in velocity()) {
        let p = ReferenceParticle::disk(0.7).unwrap();
        let f = collision_frame(&p, Beta::new(t, tb, psi)).unwrap();
        prop_assert!((f.n - e(psi)).norm() < 1e-10);
        prop_assert!((f.n_excl - e(psi)).norm() < 1e-10);
        prop_assert!(f.r.norm() < 1e-10);
        let mi = MassInertia::of(&p);
        let s = physical_scattering(&f, &mi);
        prop_assert!((s.apply(&v) - disk_block_matrix(psi).apply(&v)).norm() < 1e-10);
    }

    #[test]
    fn physical_scattering_conserves(t in angle(), tb in angle(), psi in angle(), v in velocity()) {
        let p = ellipse();
        let mi = MassInertia::of(&p);
        let f = collision_frame(&p, Beta::new(t, tb, psi)).unwrap();
        let normal = collision_normal(&f, &mi);
        for s in [physical_scattering(&f, &mi), almost_physical(&f, &mi)] {
            let w = s.apply(&v);
            let ((p0, e0), (p1, e1)) = (momentum_energy(&v, &mi), momentum_energy(&w, &mi));
            prop_assert!((p0 - p1).norm() < 1e-10);
            prop_assert!((e0 - e1).abs() < 1e-10 * e0.max(1.0));
            prop_assert!((s.apply(&w) - v).norm() < 1e-10);
        }
        let sigma = physical_scattering(&f, &mi);
        let flipped = classify(&sigma.apply(&v), &normal);
        match classify(&v, &normal) {
            Classification::PreCollisional => prop_assert_eq!(flipped, Classification::PostCollisional),
            Classification::PostCollisional => prop_assert_eq!(flipped, Classification::PreCollisional),
            Classification::Tangential => prop_assert_eq!(flipped, Classification::Tangential),
        }
    }

    #[test]
    fn general_family_conserves(
        t in angle(), tb in angle(), psi in angle(), v in velocity(),
        signs in prop::array::uniform3(prop::bool::ANY), seed in 0usize..6,
    ) {
        let p = ellipse();
        let mi = MassInertia::of(&p);
        let f = collision_frame(&p, Beta::new(t, tb, psi)).unwrap();
        let signs = signs.map(|s| if s { 1 } else { -1 });
        let s = general_family(&f, &mi, signs, seed).unwrap();
        let w = s.apply(&v);
        let ((p0, e0), (p1, e1)) = (momentum_energy(&v, &mi), momentum_energy(&w, &mi));
        prop_assert!((p0 - p1).norm() < 1e-10);
        prop_assert!((e0 - e1).abs() < 1e-10 * e0.max(1.0));
        prop_assert!(s.involution_error() < 1e-10);
        prop_assert!(s.orthogonality_error(&mi) < 1e-10);
    }

    #[test]
    fn canonical_roundtrip(v in velocity()) {
        let mi = MassInertia::of(&ellipse());
        let em = energy_momentum(&v, &mi);
        prop_assume!(em.radius(mi.m).map(|r| r > 1e-3).unwrap_or(false));
        let w = canonical_map(&v, &em, &mi).unwrap();
        prop_assert!((w.norm() - 1.0).abs() < 1e-10);
        let back = canonical_inverse(&w, &em, &mi).unwrap();
        prop_assert!((back - v).norm() < 1e-9 * v.norm().max(1.0));
    }

    #[test]
    fn rank_grows_with_samples(t in angle(), tb in angle()) {
        let p = ellipse();
        let small = span_rank(&p, t, tb, 4).unwrap();
        let large = span_rank(&p, t, tb, 32).unwrap();
        prop_assert!(small <= large && large <= 4);
    }

    #[test]
    fn free_flight_conserves(v in velocity(), t in angle(), tb in angle(), dt in 0.0..10.0f64) {
        let mi = MassInertia::of(&ellipse());
        let s = SystemState::new(Vec2::new(1.0, -2.0), t, Vec2::new(-3.0, 0.5), tb, v);
        let (a, b) = (conserved_quantities(&s, &mi), conserved_quantities(&free_flight(&s, dt), &mi));
        assert_relative_eq!(a.p[0], b.p[0], epsilon = 1e-12);
        assert_relative_eq!(a.p[1], b.p[1], epsilon = 1e-12);
        assert_relative_eq!(a.e, b.e, epsilon = 1e-12);
        assert_relative_eq!(a.a, b.a, epsilon = 1e-9);
    }
}
