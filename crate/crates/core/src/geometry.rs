//! Reference particles and the contact geometry of two identical copies.
//!
//! Shapes are described by their support function `h(α)`, with `α` the
//! angle of the outward normal. The boundary point with normal `e(α)` is
//! `x(α) = h e(α) + h' e(α)⊥` and the radius of curvature there is
//! `h + h''`, so strict convexity is positivity of that sum.

use crate::{e, perp, rotate, wrap, Error, Result, Vec2};
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

const QUAD_NODES: usize = 2048;
const CONVEXITY_SAMPLES: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shape {
    Disk { radius: f64 },
    Ellipse { a: f64, b: f64 },
    /// Support function `h(α) = Σⱼ cⱼ cos(2jα)`; only even harmonics, so the
    /// body is symmetric in both coordinate axes.
    Fourier { coefficients: Vec<f64> },
}

impl Shape {
    /// `(h, h', h'')` at normal angle `alpha`.
    pub fn support(&self, alpha: f64) -> (f64, f64, f64) {
        match self {
            Shape::Disk { radius } => (*radius, 0.0, 0.0),
            Shape::Ellipse { a, b } => {
                let (s, c) = alpha.sin_cos();
                let k = b * b - a * a;
                let h = (a * a * c * c + b * b * s * s).sqrt();
                let h1 = k * s * c / h;
                let h2 = (k * (c * c - s * s) - h1 * h1) / h;
                (h, h1, h2)
            }
            Shape::Fourier { coefficients } => {
                let (mut h, mut h1, mut h2) = (0.0, 0.0, 0.0);
                for (j, c) in coefficients.iter().enumerate() {
                    let w = 2.0 * j as f64;
                    let (s, co) = (w * alpha).sin_cos();
                    h += c * co;
                    h1 -= c * w * s;
                    h2 -= c * w * w * co;
                }
                (h, h1, h2)
            }
        }
    }

    pub fn boundary_point(&self, alpha: f64) -> Vec2 {
        let (h, h1, _) = self.support(alpha);
        h * e(alpha) + h1 * perp(&e(alpha))
    }

    pub fn boundary_normal(&self, alpha: f64) -> Vec2 {
        e(alpha)
    }

    pub fn curvature_radius(&self, alpha: f64) -> f64 {
        let (h, _, h2) = self.support(alpha);
        h + h2
    }

    /// True when the support function is constant.
    pub fn is_disk(&self) -> bool {
        match self {
            Shape::Disk { .. } => true,
            Shape::Ellipse { a, b } => a == b,
            Shape::Fourier { coefficients } => coefficients.iter().skip(1).all(|&c| c == 0.0),
        }
    }

    fn validate(&self) -> Result<()> {
        let finite_pos = |x: f64| x.is_finite() && x > 0.0;
        match self {
            Shape::Disk { radius } if !finite_pos(*radius) => {
                return Err(Error::Shape(format!("disk radius must be positive, got {radius}")))
            }
            Shape::Ellipse { a, b } if !finite_pos(*a) || !finite_pos(*b) => {
                return Err(Error::Shape(format!("ellipse semi-axes must be positive, got a={a}, b={b}")))
            }
            Shape::Fourier { coefficients } if coefficients.is_empty() || coefficients.iter().any(|c| !c.is_finite()) => {
                return Err(Error::Shape("fourier coefficients must be finite and non-empty".into()));
            }
            _ => {}
        }
        let scale = (0..CONVEXITY_SAMPLES)
            .map(|k| self.support(TAU * k as f64 / CONVEXITY_SAMPLES as f64).0.abs())
            .fold(0.0, f64::max);
        for k in 0..CONVEXITY_SAMPLES {
            let alpha = TAU * k as f64 / CONVEXITY_SAMPLES as f64;
            let (h, _, h2) = self.support(alpha);
            if h <= 0.0 {
                return Err(Error::Shape(format!("centre not interior: h({alpha:.4}) = {h}")));
            }
            if h + h2 <= 1e-9 * scale {
                return Err(Error::Shape(format!(
                    "boundary not strictly convex: curvature radius {} at alpha = {alpha:.4}",
                    h + h2
                )));
            }
        }
        Ok(())
    }
}

/// Area and `∫|y|² dy` of a shape at unit density, plus the first moment.
///
/// The body is swept as `y = s x(α)`, `s ∈ [0, 1]`, whose Jacobian is
/// `s h (h + h'')`. The radial integral is done exactly; the angular one
/// with the periodic trapezoid rule, which converges geometrically for
/// these analytic integrands.
fn moments(shape: &Shape) -> (f64, f64, Vec2) {
    let (mut area, mut inertia, mut first) = (0.0, 0.0, Vec2::zeros());
    let w = TAU / QUAD_NODES as f64;
    for k in 0..QUAD_NODES {
        let alpha = w * k as f64;
        let (h, h1, h2) = shape.support(alpha);
        let jac = h * (h + h2);
        area += 0.5 * jac;
        inertia += 0.25 * (h * h + h1 * h1) * jac;
        first += jac / 3.0 * (h * e(alpha) + h1 * perp(&e(alpha)));
    }
    (area * w, inertia * w, first * w)
}

/// Mass `m` and moment of inertia `J` about the centre.
pub fn mass_properties(shape: &Shape, density: f64) -> Result<(f64, f64)> {
    if !(density.is_finite() && density > 0.0) {
        return Err(Error::Shape(format!("density must be positive, got {density}")));
    }
    shape.validate()?;
    let (area, inertia, _) = moments(shape);
    if area <= 0.0 {
        return Err(Error::Shape("zero area".into()));
    }
    Ok((density * area, density * inertia))
}

/// A validated shape with its derived mass properties.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceParticle {
    pub shape: Shape,
    pub density: f64,
    m: f64,
    j: f64,
    r_max: f64,
    r_min: f64,
}

impl ReferenceParticle {
    pub fn new(shape: Shape, density: f64) -> Result<Self> {
        let (m, j) = mass_properties(&shape, density)?;
        let (_, _, first) = moments(&shape);
        if first.norm() * density >= 1e-10 * m {
            return Err(Error::Shape(format!("centre of mass offset {} from origin", first.norm() / m)));
        }
        let (mut r_max, mut r_min) = (0.0f64, f64::INFINITY);
        for k in 0..CONVEXITY_SAMPLES {
            let alpha = TAU * k as f64 / CONVEXITY_SAMPLES as f64;
            let (h, h1, _) = shape.support(alpha);
            r_max = r_max.max(h.hypot(h1));
            r_min = r_min.min(h);
        }
        Ok(Self { shape, density, m, j, r_max, r_min })
    }

    pub fn disk(radius: f64) -> Result<Self> {
        Self::new(Shape::Disk { radius }, 1.0)
    }

    pub fn ellipse(a: f64, b: f64) -> Result<Self> {
        Self::new(Shape::Ellipse { a, b }, 1.0)
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn j(&self) -> f64 {
        self.j
    }

    /// Largest distance from the centre to the boundary.
    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Inradius about the centre.
    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn boundary_point(&self, alpha: f64) -> Vec2 {
        self.shape.boundary_point(alpha)
    }

    pub fn boundary_normal(&self, alpha: f64) -> Vec2 {
        self.shape.boundary_normal(alpha)
    }

    pub fn is_disk(&self) -> bool {
        self.shape.is_disk()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactSolution {
    pub d: f64,
    pub alpha_self: f64,
    pub alpha_other: f64,
    pub newton_residual: f64,
}

/// Collision configuration `(ϑ, ϑ̄, ψ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Beta {
    pub theta: f64,
    pub theta_bar: f64,
    pub psi: f64,
}

impl Beta {
    pub fn new(theta: f64, theta_bar: f64, psi: f64) -> Self {
        Self { theta: wrap(theta), theta_bar: wrap(theta_bar), psi: wrap(psi) }
    }

    /// Relative orientation and elevation seen from the first particle.
    pub fn reference(&self) -> (f64, f64) {
        (wrap(self.theta_bar - self.theta), wrap(self.psi - self.theta))
    }
}

/// Residual, Jacobian and the second contact point of the tangency system
/// `x(α₁) − R(θ)x(α₂) − d e(ψ) = 0`, `sin(α₂ + θ − α₁) = 0`.
struct Tangency<'a> {
    shape: &'a Shape,
    theta: f64,
    psi: f64,
}

impl Tangency<'_> {
    fn residual(&self, z: &Vector3<f64>) -> Vector3<f64> {
        let g = self.shape.boundary_point(z[0]) - rotate(self.theta, &self.shape.boundary_point(z[1])) - z[2] * e(self.psi);
        Vector3::new(g.x, g.y, (z[1] + self.theta - z[0]).sin())
    }

    fn jacobian(&self, z: &Vector3<f64>) -> Matrix3<f64> {
        let c1 = self.shape.curvature_radius(z[0]) * perp(&e(z[0]));
        let c2 = -self.shape.curvature_radius(z[1]) * perp(&e(z[1] + self.theta));
        let c3 = -e(self.psi);
        let cs = (z[1] + self.theta - z[0]).cos();
        Matrix3::new(c1.x, c2.x, c3.x, c1.y, c2.y, c3.y, -cs, cs, 0.0)
    }

    /// Coarse bisection on `d` using the separating-axis test for the two
    /// bodies. Returns `(lo, hi, u)` where `u` is the best separating normal
    /// found at `hi`.
    fn bracket(&self, grid: usize, iters: usize, r_max: f64) -> (f64, f64, f64) {
        let us: Vec<f64> = (0..grid).map(|k| TAU * k as f64 / grid as f64).collect();
        let hs: Vec<f64> = us.iter().map(|&u| self.shape.support(u).0 + self.shape.support(u + PI - self.theta).0).collect();
        let cs: Vec<f64> = us.iter().map(|&u| (u - self.psi).cos()).collect();
        let best = |d: f64| {
            let mut arg = (f64::NEG_INFINITY, 0.0);
            for k in 0..grid {
                let g = d * cs[k] - hs[k];
                if g > arg.0 {
                    arg = (g, us[k]);
                }
            }
            arg
        };
        let (mut lo, mut hi) = (0.0, 2.0 * r_max * (1.0 + 1e-6));
        for _ in 0..iters {
            let mid = 0.5 * (lo + hi);
            if best(mid).0 > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        (lo, hi, best(hi).1)
    }

    fn newton(&self, mut z: Vector3<f64>, scale: f64) -> Option<(Vector3<f64>, f64)> {
        let tol = 1e-13 * scale;
        for _ in 0..60 {
            let g = self.residual(&z);
            let res = g.norm();
            if res <= tol {
                return Some((z, res));
            }
            let mut step = self.jacobian(&z).lu().solve(&(-g))?;
            let ang = step[0].abs().max(step[1].abs());
            if ang > 0.5 {
                step *= 0.5 / ang;
            }
            z += step;
            if !z.iter().all(|v| v.is_finite()) {
                return None;
            }
        }
        let res = self.residual(&z).norm();
        (res <= 1e3 * tol).then_some((z, res))
    }

    fn accept(&self, z: &Vector3<f64>) -> bool {
        z[2] > 0.0 && (z[1] + self.theta - z[0]).cos() < 0.0
    }
}

struct Solved {
    contact: ContactSolution,
    dd_dpsi: f64,
    dd_dtheta: f64,
}

fn solve(particle: &ReferenceParticle, theta: f64, psi: f64, with_gradient: bool) -> Result<Solved> {
    let sys = Tangency { shape: &particle.shape, theta, psi };
    let scale = particle.r_max;
    let mut attempt = None;
    let mut bracket = (0.0, 0.0);
    for &(grid, iters) in &[(64usize, 24usize), (2048, 60)] {
        let (lo, hi, u) = sys.bracket(grid, iters, scale);
        bracket = (lo, hi);
        let seed = Vector3::new(u, u + PI - theta, hi);
        if let Some((z, res)) = sys.newton(seed, scale) {
            if sys.accept(&z) {
                attempt = Some((z, res));
                break;
            }
        }
    }
    let Some((z, res)) = attempt else {
        return Err(Error::Contact { theta, psi, lo: bracket.0, hi: bracket.1 });
    };
    let contact = ContactSolution { d: z[2], alpha_self: wrap(z[0]), alpha_other: wrap(z[1]), newton_residual: res };
    if !with_gradient {
        return Ok(Solved { contact, dd_dpsi: f64::NAN, dd_dtheta: f64::NAN });
    }
    let jac = sys.jacobian(&z);
    if jac.determinant().abs() < 1e-12 * scale * scale {
        return Err(Error::SingularJacobian { theta, psi });
    }
    let lu = jac.lu();
    let gpsi = -z[2] * perp(&e(psi));
    let gtheta = -rotate(theta, &perp(&particle.shape.boundary_point(z[1])));
    let dpsi = lu.solve(&-Vector3::new(gpsi.x, gpsi.y, 0.0));
    let dtheta = lu.solve(&-Vector3::new(gtheta.x, gtheta.y, (z[1] + theta - z[0]).cos()));
    match (dpsi, dtheta) {
        (Some(a), Some(b)) => Ok(Solved { contact, dd_dpsi: a[2], dd_dtheta: b[2] }),
        _ => Err(Error::SingularJacobian { theta, psi }),
    }
}

/// Distance of closest approach `d_θ(ψ)`: the centre distance at which
/// `R(θ)P* + d e(ψ)` touches `P*` at a single point.
pub fn closest_approach(particle: &ReferenceParticle, theta: f64, psi: f64) -> Result<ContactSolution> {
    if particle.is_disk() {
        let r = particle.r_max;
        return Ok(ContactSolution { d: 2.0 * r, alpha_self: wrap(psi), alpha_other: wrap(psi + PI - theta), newton_residual: 0.0 });
    }
    solve(particle, theta, psi, false).map(|s| s.contact)
}

/// `(∂d/∂ψ, ∂d/∂θ)` by implicit differentiation of the tangency system.
pub fn closest_approach_gradient(particle: &ReferenceParticle, theta: f64, psi: f64) -> Result<(f64, f64)> {
    if particle.is_disk() {
        return Ok((0.0, 0.0));
    }
    solve(particle, theta, psi, true).map(|s| (s.dd_dpsi, s.dd_dtheta))
}

/// Geometric collision data at a configuration `β`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionFrame {
    pub beta: Beta,
    pub d: f64,
    /// Contact point measured from the first centre.
    pub p: Vec2,
    /// Contact point measured from the second centre, `p − d e(ψ)`.
    pub q: Vec2,
    /// Outward normal of the first particle at the contact point.
    pub n: Vec2,
    /// Unnormalised normal of the curve of closest approach.
    pub n_tilde: Vec2,
    /// Exclusion normal `Ñ/|Ñ|`.
    pub n_excl: Vec2,
    pub r: Vec2,
    pub dd_dpsi: f64,
    pub dd_dtheta: f64,
    pub contact: ContactSolution,
}

impl CollisionFrame {
    pub fn e_psi(&self) -> Vec2 {
        e(self.beta.psi)
    }
}

pub fn collision_frame(particle: &ReferenceParticle, beta: Beta) -> Result<CollisionFrame> {
    let (theta, psi_ref) = beta.reference();
    let s = if particle.is_disk() {
        Solved { contact: closest_approach(particle, theta, psi_ref)?, dd_dpsi: 0.0, dd_dtheta: 0.0 }
    } else {
        solve(particle, theta, psi_ref, true)?
    };
    let d = s.contact.d;
    let ep = e(beta.psi);
    let p = rotate(beta.theta, &particle.boundary_point(s.contact.alpha_self));
    let q = p - d * ep;
    let n = rotate(beta.theta, &particle.boundary_normal(s.contact.alpha_self));
    let n_tilde = ep - (s.dd_dpsi / d) * perp(&ep);
    let n_excl = n_tilde.normalize();
    let r = -s.dd_dtheta * perp(&ep);
    Ok(CollisionFrame { beta, d, p, q, n, n_tilde, n_excl, r, dd_dpsi: s.dd_dpsi, dd_dtheta: s.dd_dtheta, contact: s.contact })
}

/// Elevation angle of the line of centres, `arg(x − x̄)`.
pub fn elevation(x: &Vec2, x_bar: &Vec2) -> f64 {
    let z = x - x_bar;
    wrap(z.y.atan2(z.x))
}

/// Signed separation `F = |x − x̄| − d`: positive when disjoint, zero at
/// single-point contact.
pub fn separation(particle: &ReferenceParticle, x: &Vec2, theta: f64, x_bar: &Vec2, theta_bar: f64) -> Result<f64> {
    let dist = (x - x_bar).norm();
    if dist.is_nan() || dist <= 0.0 {
        return Err(Error::Domain("coincident centres".into()));
    }
    let psi = elevation(x, x_bar);
    let d = closest_approach(particle, wrap(theta_bar - theta), wrap(psi - theta))?.d;
    Ok(dist - d)
}
