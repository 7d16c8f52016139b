//! Independent reference computations used to check the library.
#![allow(dead_code)]

use convex_scatter::dynamics::{free_flight, state_separation, SystemState};
use convex_scatter::{e, perp, ReferenceParticle, Vec2};
use std::f64::consts::{PI, TAU};

pub fn ellipse_support(a: f64, b: f64, u: f64) -> f64 {
    (a * a * u.cos().powi(2) + b * b * u.sin().powi(2)).sqrt()
}

/// Largest separating margin `max_u [d cos(u − ψ) − h(u) − h(u + π − θ)]`
/// between `P` and `R(θ)P + d e(ψ)`; positive iff the bodies are disjoint.
/// Grid search followed by golden-section refinement.
pub fn separating_margin(h: &dyn Fn(f64) -> f64, theta: f64, psi: f64, d: f64) -> f64 {
    let g = |u: f64| d * (u - psi).cos() - h(u) - h(u + PI - theta);
    let n = 720;
    let step = TAU / n as f64;
    let best = (0..n).map(|k| k as f64 * step).max_by(|a, b| g(*a).total_cmp(&g(*b))).unwrap();
    let (mut a, mut b) = (best - step, best + step);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let (c, dd) = (b - r * (b - a), a + r * (b - a));
        if g(c) > g(dd) {
            b = dd;
        } else {
            a = c;
        }
    }
    g(0.5 * (a + b)).max(g(best))
}

/// Contact distance by bisection on the separating-axis predicate.
pub fn bisection_distance(h: &dyn Fn(f64) -> f64, theta: f64, psi: f64, upper: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, upper);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if separating_margin(h, theta, psi, mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, eps: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * eps {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, eps, 40)
}

/// Area and polar moment of a body whose support function is the cosine
/// series `Σ cⱼ cos(2jα)`, from the boundary integrals `½∮ x × dx` and
/// `¼∮ |x|² x × dx`. The boundary tangent is taken by finite differences.
pub fn fourier_moments(coefficients: &[f64]) -> (f64, f64) {
    let h = |a: f64| coefficients.iter().enumerate().map(|(j, c)| c * (2.0 * j as f64 * a).cos()).sum::<f64>();
    let dh = |a: f64| coefficients.iter().enumerate().map(|(j, c)| -c * 2.0 * j as f64 * (2.0 * j as f64 * a).sin()).sum::<f64>();
    let x = move |a: f64| h(a) * e(a) + dh(a) * perp(&e(a));
    let dx = move |a: f64| {
        let s = 1e-3;
        (x(a - 2.0 * s) - 8.0 * x(a - s) + 8.0 * x(a + s) - x(a + 2.0 * s)) / (12.0 * s)
    };
    let cross = move |a: f64| {
        let (p, t) = (x(a), dx(a));
        p.x * t.y - p.y * t.x
    };
    let area = adaptive_simpson(&|a| 0.5 * cross(a), 0.0, TAU, 1e-13);
    let inertia = adaptive_simpson(&|a| 0.25 * x(a).norm_squared() * cross(a), 0.0, TAU, 1e-13);
    (area, inertia)
}

/// Outward unit normal of the curve `ψ ↦ d(ψ)e(ψ)` by central differences.
pub fn curve_normal(d: &dyn Fn(f64) -> f64, psi: f64) -> Vec2 {
    let s = 1e-5;
    let c = |p: f64| d(p) * e(p);
    let t = (c(psi + s) - c(psi - s)) / (2.0 * s);
    -perp(&t).normalize()
}

/// First grid time with `F ≤ 0`, scanning free flight with a fixed step.
pub fn first_contact_scan(particle: &ReferenceParticle, s: &SystemState, horizon: f64, step: f64) -> Option<f64> {
    let n = (horizon / step).ceil() as usize;
    (1..=n).map(|k| k as f64 * step).find(|&t| state_separation(particle, &free_flight(s, t)).unwrap() <= 0.0)
}
