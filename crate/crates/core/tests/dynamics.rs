//! Whole-trajectory behaviour of the event-driven simulator.

use convex_scatter::dynamics::{contact_state, conserved_quantities, random_state, simulate, simulate_batch, Family};
use convex_scatter::geometry::collision_frame;
use convex_scatter::scattering::{almost_physical, find_unphysical_witness, physical_scattering, MassInertia};
use convex_scatter::invariants::random_beta;
use convex_scatter::par::task_rng;
use convex_scatter::{Execution, ReferenceParticle, Vec6};
use rand::Rng;

fn ellipse() -> ReferenceParticle {
    ReferenceParticle::ellipse(2.0, 1.0).unwrap()
}

#[test]
fn time_reversal_retraces() {
    let p = ellipse();
    let mut checked = 0;
    for i in 0..10 {
        let s = random_state(&p, 5, i);
        let fwd = simulate(&p, &s, 8.0, Family::Physical, 1.0).unwrap();
        if fwd.events.is_empty() {
            continue;
        }
        checked += 1;
        let back = simulate(&p, &fwd.final_state.reversed(), 8.0, Family::Physical, 1.0).unwrap();
        assert_eq!(back.events.len(), fwd.events.len(), "run {i}");
        for (a, b) in fwd.events.iter().zip(back.events.iter().rev()) {
            assert!((a.time - (16.0 - b.time)).abs() < 1e-6, "run {i}: {} vs {}", a.time, b.time);
        }
        let end = back.final_state;
        assert!((end.x - s.x).norm() < 1e-6 && (end.x_bar - s.x_bar).norm() < 1e-6, "run {i}");
        assert!((end.v + s.v).norm() < 1e-6, "run {i}");
        assert!((end.theta_unwrapped - s.theta_unwrapped).abs() < 1e-6, "run {i}");
    }
    assert!(checked >= 5, "only {checked} runs had collisions");
}

#[test]
fn physical_map_keeps_lab_angular_momentum() {
    let p = ellipse();
    let mi = MassInertia::of(&p);
    let mut rng = task_rng(9, 0);
    let mut worst_u: f64 = 0.0;
    for _ in 0..200 {
        let beta = random_beta(&mut rng);
        let v = Vec6::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let s = contact_state(&p, beta, v).unwrap();
        let f = collision_frame(&p, beta).unwrap();
        let a0 = conserved_quantities(&s, &mi).a;
        let sigma = physical_scattering(&f, &mi).apply(&v);
        let u = almost_physical(&f, &mi).apply(&v);
        let a_sigma = conserved_quantities(&convex_scatter::dynamics::SystemState { v: sigma, ..s }, &mi).a;
        let a_u = conserved_quantities(&convex_scatter::dynamics::SystemState { v: u, ..s }, &mi).a;
        assert!((a_sigma - a0).abs() < 1e-10, "σ changed A by {}", a_sigma - a0);
        worst_u = worst_u.max((a_u - a0).abs());
    }
    assert!(worst_u > 1e-6, "u never changed A ({worst_u:e})");
}

#[test]
fn almost_physical_family_penetrates() {
    let p = ellipse();
    let w = find_unphysical_witness(&p, 4096, Execution::Parallel).unwrap().expect("witness");
    let s = contact_state(&p, w.beta, w.velocity).unwrap();
    let bad = simulate(&p, &s, 1.0, Family::AlmostPhysical, 0.5).unwrap();
    assert_eq!(bad.penetration, Some(0.0));
    let good = simulate(&p, &s, 1.0, Family::Physical, 0.5).unwrap();
    assert!(good.penetration.is_none());
    assert!(good.events[0].gamma_dot_post > 0.0);
}

#[test]
fn runs_are_deterministic() {
    let p = ellipse();
    let states: Vec<_> = (0..16).map(|i| random_state(&p, 2024, i)).collect();
    let seq = simulate_batch(&p, &states, 5.0, Family::Physical, 0.5, Execution::Sequential);
    let par = simulate_batch(&p, &states, 5.0, Family::Physical, 0.5, Execution::Parallel);
    for (a, b) in seq.iter().zip(&par) {
        assert_eq!(a.as_ref().unwrap(), b.as_ref().unwrap());
    }
    assert_eq!(random_state(&p, 2024, 3), states[3]);
}
