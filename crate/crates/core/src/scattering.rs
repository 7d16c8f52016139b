//! Collision normals and the linear scattering maps built from them.
//!
//! Everything is expressed through the mass-inertia matrix
//! `M = diag(√m, √m, √m, √m, √J, √J)`. In the quasi-momentum variables `MV`
//! kinetic energy is the squared Euclidean norm, and every map here is a
//! Euclidean reflection `I − 2 û ûᵀ` conjugated by `M`.

use crate::geometry::{collision_frame, Beta, CollisionFrame, ReferenceParticle};
use crate::par::Execution;
use crate::{perp, Error, Mat6, Result, Vec2, Vec6};
use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

/// Band around the hyperplane `V·γ = 0` treated as tangential.
pub const TANGENTIAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassInertia {
    pub m: f64,
    pub j: f64,
}

impl MassInertia {
    pub fn new(m: f64, j: f64) -> Self {
        Self { m, j }
    }

    pub fn of(particle: &ReferenceParticle) -> Self {
        Self { m: particle.m(), j: particle.j() }
    }

    pub fn diag(&self) -> Vec6 {
        let (a, b) = (self.m.sqrt(), self.j.sqrt());
        Vec6::new(a, a, a, a, b, b)
    }

    pub fn matrix(&self) -> Mat6 {
        Mat6::from_diagonal(&self.diag())
    }

    /// `MV`.
    pub fn apply(&self, v: &Vec6) -> Vec6 {
        v.component_mul(&self.diag())
    }

    /// `M⁻¹V`.
    pub fn apply_inv(&self, v: &Vec6) -> Vec6 {
        v.component_div(&self.diag())
    }
}

fn stack(a: Vec2, b: Vec2, c: f64, d: f64) -> Vec6 {
    Vec6::new(a.x, a.y, b.x, b.y, c, d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionNormal {
    pub gamma: Vec6,
    /// `M⁻¹γ`, a unit vector.
    pub gamma_hat: Vec6,
    pub lambda: f64,
}

pub fn collision_normal(frame: &CollisionFrame, mi: &MassInertia) -> CollisionNormal {
    let nn = frame.n_excl;
    let a = perp(&(frame.r - frame.d * frame.e_psi())).dot(&nn);
    let b = -perp(&frame.r).dot(&nn);
    let lambda = 2.0 / mi.m + (a * a + b * b) / mi.j;
    let gamma = stack(nn, -nn, a, b) / lambda.sqrt();
    CollisionNormal { gamma, gamma_hat: mi.apply_inv(&gamma), lambda }
}

/// Unit normal of the angular-momentum-preserving family, built from the
/// contact normal and the two collision vectors.
pub fn eta_hat(frame: &CollisionFrame, mi: &MassInertia) -> Vec6 {
    let n = frame.n;
    let a = perp(&frame.p).dot(&n);
    let b = perp(&frame.q).dot(&n);
    let radicand = 2.0 / mi.m + (a * a + b * b) / mi.j;
    mi.apply_inv(&stack(n, -n, a, -b)) / radicand.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScatteringKind {
    Physical,
    AlmostPhysical,
    General { signs: [i8; 3], basis_seed: usize },
    DiskBlock,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringMatrix {
    pub matrix: Mat6,
    pub kind: ScatteringKind,
}

impl ScatteringMatrix {
    pub fn apply(&self, v: &Vec6) -> Vec6 {
        self.matrix * v
    }

    /// `max |S² − I|`.
    pub fn involution_error(&self) -> f64 {
        (self.matrix * self.matrix - Mat6::identity()).amax()
    }

    /// `max |QᵀQ − I|` for `Q = M S M⁻¹`.
    pub fn orthogonality_error(&self, mi: &MassInertia) -> f64 {
        let q = self.quasi(mi);
        (q.transpose() * q - Mat6::identity()).amax()
    }

    /// `M S M⁻¹`.
    pub fn quasi(&self, mi: &MassInertia) -> Mat6 {
        let d = mi.diag();
        Mat6::from_fn(|i, j| self.matrix[(i, j)] * d[i] / d[j])
    }

    pub fn row_major(&self) -> [f64; 36] {
        std::array::from_fn(|k| self.matrix[(k / 6, k % 6)])
    }
}

/// `M⁻¹(I − 2ûûᵀ)M`.
fn conjugated_reflection(u: &Vec6, mi: &MassInertia) -> Mat6 {
    let d = mi.diag();
    Mat6::from_fn(|i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        (id - 2.0 * u[i] * u[j]) * d[j] / d[i]
    })
}

pub fn physical_scattering(frame: &CollisionFrame, mi: &MassInertia) -> ScatteringMatrix {
    let g = collision_normal(frame, mi).gamma_hat;
    ScatteringMatrix { matrix: conjugated_reflection(&g, mi), kind: ScatteringKind::Physical }
}

pub fn almost_physical(frame: &CollisionFrame, mi: &MassInertia) -> ScatteringMatrix {
    ScatteringMatrix { matrix: conjugated_reflection(&eta_hat(frame, mi), mi), kind: ScatteringKind::AlmostPhysical }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    PreCollisional,
    PostCollisional,
    Tangential,
}

/// Sign of `V·γ`: non-positive is pre-collisional, non-negative post.
pub fn classify(v: &Vec6, normal: &CollisionNormal) -> Classification {
    let s = v.dot(&normal.gamma);
    if s.abs() <= TANGENTIAL_TOL {
        Classification::Tangential
    } else if s < 0.0 {
        Classification::PreCollisional
    } else {
        Classification::PostCollisional
    }
}

/// A member of the full family of momentum- and energy-conserving linear
/// scattering maps at `frame`. The orthonormal completion `Ê₃, Ê₄, Ê₅` of
/// `{Ê₁, Ê₂, γ̂}` is Gram–Schmidt over the coordinate vectors taken in the
/// cyclic order starting at `basis_seed`.
pub fn general_family(frame: &CollisionFrame, mi: &MassInertia, signs: [i8; 3], basis_seed: usize) -> Result<ScatteringMatrix> {
    if signs.iter().any(|s| s.abs() != 1) {
        return Err(Error::Domain(format!("signs must be ±1, got {signs:?}")));
    }
    let g = collision_normal(frame, mi).gamma_hat;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut basis = vec![Vec6::new(h, 0.0, h, 0.0, 0.0, 0.0), Vec6::new(0.0, h, 0.0, h, 0.0, 0.0), g];
    for k in 0..6 {
        if basis.len() == 6 {
            break;
        }
        let mut c = Vec6::zeros();
        c[(basis_seed + k) % 6] = 1.0;
        for b in &basis {
            c -= b.dot(&c) * b;
        }
        for b in &basis {
            c -= b.dot(&c) * b;
        }
        let norm = c.norm();
        if norm > 1e-6 {
            basis.push(c / norm);
        }
    }
    if basis.len() != 6 {
        return Err(Error::Numerical("orthonormal completion failed".into()));
    }
    let mut r = basis[0] * basis[0].transpose() + basis[1] * basis[1].transpose() - g * g.transpose();
    for (s, b) in signs.iter().zip(&basis[3..]) {
        r += f64::from(*s) * b * b.transpose();
    }
    let d = mi.diag();
    let matrix = Mat6::from_fn(|i, j| r[(i, j)] * d[j] / d[i]);
    Ok(ScatteringMatrix { matrix, kind: ScatteringKind::General { signs, basis_seed } })
}

/// Unit normal `(e(ψ), −e(ψ))/√2` of the hard-disk reflection.
pub fn disk_normal(psi: f64) -> Vector4<f64> {
    let (s, c) = psi.sin_cos();
    Vector4::new(c, s, -c, -s) * std::f64::consts::FRAC_1_SQRT_2
}

/// Hard-disk scattering `I − 2γ̂γ̂ᵀ` on `(v, v̄) ∈ R⁴`.
pub fn disk_scattering(psi: f64) -> Matrix4<f64> {
    let g = disk_normal(psi);
    Matrix4::identity() - 2.0 * g * g.transpose()
}

/// Block matrix with [`disk_scattering`] on the linear velocities and the
/// identity on the spins.
pub fn disk_block_matrix(psi: f64) -> ScatteringMatrix {
    let s = disk_scattering(psi);
    let mut matrix = Mat6::identity();
    matrix.fixed_view_mut::<4, 4>(0, 0).copy_from(&s);
    ScatteringMatrix { matrix, kind: ScatteringKind::DiskBlock }
}

/// A strictly pre-collisional velocity left fixed by the almost-physical map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Witness {
    pub beta: Beta,
    pub velocity: Vec6,
    /// `γ·V`, negative.
    pub gamma_dot_v: f64,
    /// `|uV − V|`.
    pub fixed_point_error: f64,
}

/// Low-discrepancy point `k` on the 3-torus (additive recurrence with the
/// inverse powers of the plastic number).
pub fn torus_point(k: usize) -> Beta {
    const G: f64 = 1.324_717_957_244_746;
    let a = [1.0 / G, 1.0 / (G * G), 1.0 / (G * G * G)];
    let t = |i: usize| std::f64::consts::TAU * (0.5 + a[i] * k as f64).fract();
    Beta::new(t(0), t(1), t(2))
}

/// Search `budget` configurations for `(β*, V*)` with `u V* = V*` and
/// `γ·V* < −1e-6`. `V*` is the projection of `−γ̂` onto the orthogonal
/// complement of `η̂`, mapped back by `M⁻¹`. Returns the sample with the most
/// negative `γ·V*`, or `None` when `η̂ ∥ γ̂` everywhere sampled.
pub fn find_unphysical_witness(particle: &ReferenceParticle, budget: usize, exec: Execution) -> Result<Option<Witness>> {
    let mi = MassInertia::of(particle);
    let found = exec.try_map(budget, |k| -> Result<Option<Witness>> {
        let beta = torus_point(k);
        let frame = collision_frame(particle, beta)?;
        let normal = collision_normal(&frame, &mi);
        let eta = eta_hat(&frame, &mi);
        let target = -normal.gamma_hat;
        let proj = target - eta.dot(&target) * eta;
        let norm = proj.norm();
        if norm < 1e-9 {
            return Ok(None);
        }
        let velocity = mi.apply_inv(&(proj / norm));
        let gamma_dot_v = normal.gamma.dot(&velocity);
        if gamma_dot_v >= -1e-6 {
            return Ok(None);
        }
        let u = almost_physical(&frame, &mi);
        let fixed_point_error = (u.apply(&velocity) - velocity).norm();
        Ok(Some(Witness { beta, velocity, gamma_dot_v, fixed_point_error }))
    })?;
    Ok(found.into_iter().flatten().min_by(|a, b| a.gamma_dot_v.total_cmp(&b.gamma_dot_v)))
}
