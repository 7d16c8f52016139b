//! Contact geometry, scattering matrices, event-driven dynamics and
//! collision-invariant analysis for pairs of identical strictly convex
//! planar particles.
//!
//! Velocities are 6-vectors `V = [v, v̄, ω, ω̄]`. A collision configuration
//! is `β = (ϑ, ϑ̄, ψ)`: the two orientations and the elevation angle of the
//! line of centres.

pub mod dynamics;
pub mod geometry;
pub mod invariants;
pub mod par;
pub mod scattering;

pub use geometry::{Beta, CollisionFrame, ContactSolution, ReferenceParticle, Shape};
pub use par::Execution;
pub use scattering::{Classification, CollisionNormal, MassInertia, ScatteringKind, ScatteringMatrix};

use nalgebra::{SMatrix, SVector, Vector2};

pub type Vec2 = Vector2<f64>;
pub type Vec6 = SVector<f64, 6>;
pub type Mat6 = SMatrix<f64, 6, 6>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    Shape(String),
    #[error("contact solve did not converge (theta={theta}, psi={psi}); d bracketed in [{lo}, {hi}]")]
    Contact { theta: f64, psi: f64, lo: f64, hi: f64 },
    #[error("singular tangency jacobian (theta={theta}, psi={psi})")]
    SingularJacobian { theta: f64, psi: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("ill-conditioned basis: {0}")]
    IllConditioned(String),
}

impl Error {
    /// True for failures of an iterative or linear-algebra step, as opposed
    /// to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Contact { .. } | Error::SingularJacobian { .. } | Error::Numerical(_) | Error::IllConditioned(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Unit vector `(cos a, sin a)`.
#[inline]
pub fn e(a: f64) -> Vec2 {
    let (s, c) = a.sin_cos();
    Vec2::new(c, s)
}

/// Counter-clockwise quarter turn, `x⊥ = (-x₂, x₁)`.
#[inline]
pub fn perp(x: &Vec2) -> Vec2 {
    Vec2::new(-x.y, x.x)
}

#[inline]
pub fn rotate(a: f64, x: &Vec2) -> Vec2 {
    let (s, c) = a.sin_cos();
    Vec2::new(c * x.x - s * x.y, s * x.x + c * x.y)
}

/// Reduce an angle to `[0, 2π)`.
#[inline]
pub fn wrap(a: f64) -> f64 {
    let w = a.rem_euclid(std::f64::consts::TAU);
    if w >= std::f64::consts::TAU {
        0.0
    } else {
        w
    }
}
