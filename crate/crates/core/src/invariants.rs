//! Energy-momentum manifolds, their canonical maps to spheres, reflection
//! group orbits, and the numerical characterisation of collision invariants.

use crate::dynamics::Family;
use crate::geometry::{collision_frame, Beta, CollisionFrame, ReferenceParticle};
use crate::par::{task_rng, Execution};
use crate::scattering::{almost_physical, collision_normal, physical_scattering, MassInertia};
use crate::{e, perp, wrap, Error, Result, Vec2, Vec6};
use nalgebra::{DMatrix, DVector, Matrix4, Vector4};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2, TAU};

const DEGENERACY_TOL: f64 = 1e-12;
/// Golden-ratio increment for nested low-discrepancy angle sequences.
const GOLDEN: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyMomentum {
    /// `e = |MV|`.
    pub e: f64,
    /// `p = m(v + v̄)`.
    pub p: Vec2,
}

impl EnergyMomentum {
    /// `√(2e² − |p|²/m)`, the radius of the relative-motion sphere.
    pub fn radius(&self, m: f64) -> Result<f64> {
        let r2 = 2.0 * self.e * self.e - self.p.norm_squared() / m;
        if self.e * self.e <= self.p.norm_squared() / (2.0 * m) + DEGENERACY_TOL {
            return Err(Error::Domain(format!("degenerate energy-momentum manifold (e² = {}, |p|²/2m = {})", self.e * self.e, self.p.norm_squared() / (2.0 * m))));
        }
        Ok(r2.sqrt())
    }

    /// `|E − e²|/e²` and `|P − p|/(√m e)` for a velocity `v`.
    pub fn deviation(&self, v: &Vec6, mi: &MassInertia) -> (f64, f64) {
        let o = energy_momentum(v, mi);
        let scale = self.e.max(f64::MIN_POSITIVE);
        ((o.e * o.e - self.e * self.e).abs() / (scale * scale), (o.p - self.p).norm() / (mi.m.sqrt() * scale))
    }
}

pub fn energy_momentum(v: &Vec6, mi: &MassInertia) -> EnergyMomentum {
    EnergyMomentum { e: mi.apply(v).norm(), p: mi.m * Vec2::new(v[0] + v[2], v[1] + v[3]) }
}

/// Canonical map of `M(e, p)` onto `S³`.
pub fn canonical_map(v: &Vec6, em: &EnergyMomentum, mi: &MassInertia) -> Result<Vector4<f64>> {
    em.radius(mi.m)?;
    let (de, dp) = em.deviation(v, mi);
    if de > 1e-8 || dp > 1e-8 {
        return Err(Error::Domain(format!("velocity is off the manifold (energy {de:e}, momentum {dp:e})")));
    }
    let mv = mi.apply(v);
    let raw = Vector4::new(mv[0] - mv[2], mv[1] - mv[3], SQRT_2 * mv[4], SQRT_2 * mv[5]);
    Ok(raw / raw.norm())
}

/// Inverse of [`canonical_map`].
pub fn canonical_inverse(w: &Vector4<f64>, em: &EnergyMomentum, mi: &MassInertia) -> Result<Vec6> {
    let r = em.radius(mi.m)?;
    let q = em.p / mi.m.sqrt();
    let mv = Vec6::new(
        0.5 * (r * w[0] + q.x),
        0.5 * (r * w[1] + q.y),
        0.5 * (q.x - r * w[0]),
        0.5 * (q.y - r * w[1]),
        r * w[2] / SQRT_2,
        r * w[3] / SQRT_2,
    );
    Ok(mi.apply_inv(&mv))
}

/// Unit vector whose reflection on `S³` is conjugate to `σ_β`.
pub fn mu_vector(frame: &CollisionFrame, mi: &MassInertia) -> Vector4<f64> {
    let lambda = collision_normal(frame, mi).lambda;
    let nn = frame.n_excl;
    let a = perp(&(frame.r - frame.d * frame.e_psi())).dot(&nn);
    let b = -perp(&frame.r).dot(&nn);
    let (sm, sj) = (mi.m.sqrt(), mi.j.sqrt());
    (2.0 / lambda).sqrt() * Vector4::new(nn.x / sm, nn.y / sm, a / (SQRT_2 * sj), b / (SQRT_2 * sj))
}

/// `[n, −p⊥·n, (p − d e(ψ))⊥·n]`.
pub fn xi_vector(frame: &CollisionFrame) -> Vector4<f64> {
    let n = frame.n;
    Vector4::new(n.x, n.y, -perp(&frame.p).dot(&n), perp(&(frame.p - frame.d * frame.e_psi())).dot(&n))
}

/// Elevation angles at which the contact point on the first body is the
/// end of its first (resp. second) symmetry axis. At both, `p⊥·n = 0`.
pub fn symmetry_axis_angles(particle: &ReferenceParticle, theta: f64, theta_bar: f64) -> [f64; 2] {
    let rel = theta_bar - theta;
    let at = |u: f64| {
        let (h1, d1, _) = particle.shape.support(u);
        let (h2, d2, _) = particle.shape.support(u + PI - rel);
        let z = (h1 + h2) * e(u) + (d1 + d2) * perp(&e(u));
        wrap(z.y.atan2(z.x) + theta)
    };
    [at(0.0), at(PI / 2.0)]
}

/// Numerical rank (singular values above `1e-8·max`) of a set of 4-vectors.
pub fn rank4(rows: &[Vector4<f64>]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let a = DMatrix::from_fn(rows.len(), 4, |i, j| rows[i][j]);
    let sv = a.svd(false, false).singular_values;
    let top = sv.max();
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > 1e-8 * top).count()
}

/// Angle `k` of a nested golden-ratio sequence on the circle.
pub fn golden_angle(k: usize) -> f64 {
    TAU * (0.5 + GOLDEN * k as f64).fract()
}

/// Rank of `{μ̂_β : ψ}` over the first `n_samples` golden-sequence angles.
///
/// For a centrally symmetric particle the rank drops to 3 when
/// `ϑ̄ − ϑ ∈ {0, π}`: the pair is then point-symmetric about the contact
/// point, so `q = −p` and the two angular components of `μ̂` agree.
pub fn span_rank(particle: &ReferenceParticle, theta: f64, theta_bar: f64, n_samples: usize) -> Result<usize> {
    if n_samples < 4 {
        return Err(Error::Domain(format!("span_rank needs at least 4 samples, got {n_samples}")));
    }
    let mi = MassInertia::of(particle);
    let rows = (0..n_samples)
        .map(|k| collision_frame(particle, Beta::new(theta, theta_bar, golden_angle(k))).map(|f| mu_vector(&f, &mi)))
        .collect::<Result<Vec<_>>>()?;
    Ok(rank4(&rows))
}

/// [`span_rank`] over an `n × n` grid of orientations.
pub fn span_rank_grid(particle: &ReferenceParticle, n: usize, n_samples: usize, exec: Execution) -> Result<Vec<(f64, f64, usize)>> {
    exec.try_map(n * n, |k| {
        let (theta, theta_bar) = (TAU * (k / n) as f64 / n as f64, TAU * (k % n) as f64 / n as f64);
        span_rank(particle, theta, theta_bar, n_samples).map(|r| (theta, theta_bar, r))
    })
}

pub const ORBIT_GENERATORS: usize = 256;

/// Physical scattering matrices at a fixed table of elevation angles.
pub fn generator_table(particle: &ReferenceParticle, theta: f64, theta_bar: f64) -> Result<Vec<crate::Mat6>> {
    let mi = MassInertia::of(particle);
    (0..ORBIT_GENERATORS)
        .map(|g| collision_frame(particle, Beta::new(theta, theta_bar, golden_angle(g))).map(|f| physical_scattering(&f, &mi).matrix))
        .collect()
}

/// `count` orbit points: each applies a seeded random word of `word_length`
/// generators from [`generator_table`] to the start point `h⁻¹(1, 0, 0, 0)`.
#[allow(clippy::too_many_arguments)]
pub fn orbit_sample(
    particle: &ReferenceParticle,
    theta: f64,
    theta_bar: f64,
    em: &EnergyMomentum,
    seed: u64,
    word_length: usize,
    count: usize,
    exec: Execution,
) -> Result<Vec<Vec6>> {
    let mi = MassInertia::of(particle);
    let start = canonical_inverse(&Vector4::new(1.0, 0.0, 0.0, 0.0), em, &mi)?;
    let table = generator_table(particle, theta, theta_bar)?;
    exec.try_map(count, |i| {
        let mut rng = task_rng(seed, i as u64);
        let mut v = start;
        for _ in 0..word_length {
            v = table[rng.random_range(0..table.len())] * v;
        }
        let (de, dp) = em.deviation(&v, &mi);
        if de > 1e-9 || dp > 1e-9 {
            return Err(Error::Numerical(format!("orbit point {i} left the manifold (energy {de:e}, momentum {dp:e})")));
        }
        Ok(v)
    })
}

/// Bin index of a point of `S³` among `4k³` equal-measure cells. With
/// `w = (√(1−t) e(ξ₁), √t e(ξ₂))` the uniform measure makes `t`, `ξ₁`, `ξ₂`
/// independent and uniform; `t` gets `k` bins and each angle `2k`.
pub fn sphere_bin(w: &Vector4<f64>, k: usize) -> usize {
    let t = (w[2] * w[2] + w[3] * w[3]).clamp(0.0, 1.0);
    let cell = |x: f64, n: usize| ((x * n as f64) as usize).min(n - 1);
    let it = cell(t, k);
    let i1 = cell(wrap(w[1].atan2(w[0])) / TAU, 2 * k);
    let i2 = cell(wrap(w[3].atan2(w[2])) / TAU, 2 * k);
    (it * 2 * k + i1) * 2 * k + i2
}

/// Hit counts per bin.
pub fn coverage_table(points: &[Vector4<f64>], k: usize) -> Vec<usize> {
    let mut counts = vec![0; 4 * k * k * k];
    for w in points {
        counts[sphere_bin(w, k)] += 1;
    }
    counts
}

/// Fraction of the `4k³` bins hit by at least one point.
pub fn orbit_coverage(points: &[Vector4<f64>], k: usize) -> f64 {
    let table = coverage_table(points, k);
    table.iter().filter(|&&c| c > 0).count() as f64 / table.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskReflection {
    pub psi: f64,
    /// `|(I − 2e(ψ)⊥⊗e(ψ)⊥)ζ₁ − ζ₂|`.
    pub error: f64,
}

/// The reflection of `S¹` carrying `ζ₁` to `ζ₂`.
pub fn disk_reflection_witness(z1: &Vec2, z2: &Vec2) -> Result<DiskReflection> {
    for z in [z1, z2] {
        if (z.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("not a unit vector: ({}, {})", z.x, z.y)));
        }
    }
    let psi = 0.5 * (z1.y.atan2(z1.x) + z2.y.atan2(z2.x));
    let n = perp(&e(psi));
    let image = z1 - 2.0 * n.dot(z1) * n;
    Ok(DiskReflection { psi, error: (image - z2).norm() })
}

fn disk_radius(e: f64, p: &Vec2) -> Result<f64> {
    if e * e <= p.norm_squared() / 2.0 + DEGENERACY_TOL {
        return Err(Error::Domain("degenerate disk energy-momentum manifold".into()));
    }
    Ok((2.0 * e * e - p.norm_squared()).sqrt())
}

/// Hard-disk canonical map `M(e, p) → S¹` for unit masses.
pub fn disk_canonical_map(v: &Vector4<f64>, e: f64, p: &Vec2) -> Result<Vec2> {
    disk_radius(e, p)?;
    let rel = Vec2::new(v[0] - v[2], v[1] - v[3]);
    Ok(rel / rel.norm())
}

pub fn disk_canonical_inverse(z: &Vec2, e: f64, p: &Vec2) -> Result<Vector4<f64>> {
    let r = disk_radius(e, p)?;
    Ok(0.5 * Vector4::new(r * z.x + p.x, r * z.y + p.y, p.x - r * z.x, p.y - r * z.y))
}

/// `s_ψ = I − 2e(ψ)⊗e(ψ)`.
pub fn disk_sphere_reflection(psi: f64) -> nalgebra::Matrix2<f64> {
    let u = e(psi);
    nalgebra::Matrix2::identity() - 2.0 * u * u.transpose()
}

/// Reflection of `S³` conjugate to `σ_β`.
pub fn sphere_reflection(mu: &Vector4<f64>) -> Matrix4<f64> {
    Matrix4::identity() - 2.0 * mu * mu.transpose()
}

/// One Fourier mode in `ϑ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Const,
    Cos(u32),
    Sin(u32),
}

impl Mode {
    pub fn eval(self, theta: f64) -> f64 {
        match self {
            Mode::Const => 1.0,
            Mode::Cos(k) => (k as f64 * theta).cos(),
            Mode::Sin(k) => (k as f64 * theta).sin(),
        }
    }

    fn label(self) -> String {
        match self {
            Mode::Const => "1".into(),
            Mode::Cos(k) => format!("cos({k}θ)"),
            Mode::Sin(k) => format!("sin({k}θ)"),
        }
    }
}

/// Tensor basis: monomials `v₁ⁱ v₂ʲ ωᵏ` with `i + j + k ≤ degree`, times
/// Fourier modes in `ϑ` up to order `modes`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub degree: u32,
    pub modes: u32,
}

impl Default for BasisSpec {
    fn default() -> Self {
        Self { degree: 2, modes: 1 }
    }
}

impl BasisSpec {
    pub fn monomials(&self) -> Vec<[u32; 3]> {
        let mut out = vec![];
        for total in 0..=self.degree {
            for i in (0..=total).rev() {
                for j in (0..=total - i).rev() {
                    out.push([i, j, total - i - j]);
                }
            }
        }
        out
    }

    pub fn fourier(&self) -> Vec<Mode> {
        let mut out = vec![Mode::Const];
        for k in 1..=self.modes {
            out.push(Mode::Cos(k));
            out.push(Mode::Sin(k));
        }
        out
    }

    /// `(monomial, mode)` for each basis index.
    pub fn functions(&self) -> Vec<([u32; 3], Mode)> {
        let modes = self.fourier();
        self.monomials().into_iter().flat_map(|mono| modes.iter().map(move |&m| (mono, m))).collect()
    }

    pub fn len(&self) -> usize {
        self.monomials().len() * (2 * self.modes as usize + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn labels(&self) -> Vec<String> {
        let names = ["v1", "v2", "w"];
        self.functions()
            .into_iter()
            .map(|(mono, mode)| {
                let mut parts: Vec<String> = mono
                    .iter()
                    .zip(names)
                    .filter(|(p, _)| **p > 0)
                    .map(|(p, n)| if *p == 1 { n.to_string() } else { format!("{n}^{p}") })
                    .collect();
                if mode != Mode::Const || parts.is_empty() {
                    parts.push(mode.label());
                }
                parts.join("*")
            })
            .collect()
    }

    pub fn index(&self, mono: [u32; 3], mode: Mode) -> Option<usize> {
        self.functions().iter().position(|&f| f == (mono, mode))
    }

    /// All basis functions at one particle state.
    pub fn eval(&self, v: &Vec2, omega: f64, theta: f64) -> Vec<f64> {
        let modes: Vec<f64> = self.fourier().iter().map(|m| m.eval(theta)).collect();
        let mut out = Vec::with_capacity(self.len());
        for [i, j, k] in self.monomials() {
            let mono = v.x.powi(i as i32) * v.y.powi(j as i32) * omega.powi(k as i32);
            out.extend(modes.iter().map(|m| mono * m));
        }
        out
    }
}

/// A function `φ(v, ω, ϑ)` expanded over a [`BasisSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateInvariant {
    pub spec: BasisSpec,
    pub coeffs: Vec<f64>,
}

impl CandidateInvariant {
    pub fn zero(spec: BasisSpec) -> Self {
        Self { spec, coeffs: vec![0.0; spec.len()] }
    }

    /// Sum of `c·(monomial × mode)` terms; panics if a term is outside the basis.
    pub fn from_terms(spec: BasisSpec, terms: &[([u32; 3], Mode, f64)]) -> Self {
        let mut phi = Self::zero(spec);
        for &(mono, mode, c) in terms {
            let k = spec.index(mono, mode).unwrap_or_else(|| panic!("{mono:?} {mode:?} not in basis"));
            phi.coeffs[k] += c;
        }
        phi
    }

    /// `m|v|² + Jω²`.
    pub fn energy(spec: BasisSpec, mi: &MassInertia) -> Self {
        Self::from_terms(spec, &[([2, 0, 0], Mode::Const, mi.m), ([0, 2, 0], Mode::Const, mi.m), ([0, 0, 2], Mode::Const, mi.j)])
    }

    pub fn eval(&self, v: &Vec2, omega: f64, theta: f64) -> f64 {
        self.spec.eval(v, omega, theta).iter().zip(&self.coeffs).map(|(a, b)| a * b).sum()
    }
}

fn scatter(particle: &ReferenceParticle, v: &Vec6, beta: Beta, family: Family) -> Result<Vec6> {
    let frame = collision_frame(particle, beta)?;
    let mi = MassInertia::of(particle);
    let s = match family {
        Family::Physical => physical_scattering(&frame, &mi),
        Family::AlmostPhysical => almost_physical(&frame, &mi),
    };
    Ok(s.apply(v))
}

fn pair_sum(spec: &BasisSpec, v: &Vec6, beta: &Beta) -> Vec<f64> {
    let a = spec.eval(&Vec2::new(v[0], v[1]), v[4], beta.theta);
    let b = spec.eval(&Vec2::new(v[2], v[3]), v[5], beta.theta_bar);
    a.iter().zip(&b).map(|(x, y)| x + y).collect()
}

/// Residual of every basis function at one `(V, β)`: post-collision pair sum
/// minus pre-collision pair sum.
pub fn residual_row(spec: &BasisSpec, particle: &ReferenceParticle, v: &Vec6, beta: Beta, family: Family) -> Result<Vec<f64>> {
    let post = scatter(particle, v, beta, family)?;
    let after = pair_sum(spec, &post, &beta);
    let before = pair_sum(spec, v, &beta);
    Ok(after.iter().zip(&before).map(|(a, b)| a - b).collect())
}

/// `φ(v′, ω′, ϑ) + φ(v̄′, ω̄′, ϑ̄) − φ(v, ω, ϑ) − φ(v̄, ω̄, ϑ̄)`.
pub fn invariant_residual(phi: &CandidateInvariant, particle: &ReferenceParticle, v: &Vec6, beta: Beta, family: Family) -> Result<f64> {
    let row = residual_row(&phi.spec, particle, v, beta, family)?;
    Ok(row.iter().zip(&phi.coeffs).map(|(a, b)| a * b).sum())
}

/// Velocity with components drawn from `N(0, 1/m)` and `N(0, 1/J)`.
pub fn random_velocity<R: Rng>(rng: &mut R, mi: &MassInertia) -> Vec6 {
    let (sm, sj) = (mi.m.sqrt(), mi.j.sqrt());
    let mut g = || -> f64 { rng.sample(StandardNormal) };
    Vec6::new(g() / sm, g() / sm, g() / sm, g() / sm, g() / sj, g() / sj)
}

pub fn random_beta<R: Rng>(rng: &mut R) -> Beta {
    Beta::new(TAU * rng.random::<f64>(), TAU * rng.random::<f64>(), TAU * rng.random::<f64>())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullSpace {
    pub spec: BasisSpec,
    pub dimension: usize,
    /// Orthonormal coefficient vectors spanning the numerical null space.
    pub basis: Vec<Vec<f64>>,
    /// Singular values of the residual matrix, descending.
    pub singular_values: Vec<f64>,
}

impl NullSpace {
    /// Relative distance of a coefficient vector from the null space.
    pub fn projection_error(&self, c: &[f64]) -> f64 {
        let c = DVector::from_column_slice(c);
        let mut rest = c.clone();
        for b in &self.basis {
            let b = DVector::from_column_slice(b);
            rest -= b.dot(&c) * b;
        }
        rest.norm() / c.norm().max(f64::MIN_POSITIVE)
    }

    pub fn candidates(&self) -> Vec<CandidateInvariant> {
        self.basis.iter().map(|c| CandidateInvariant { spec: self.spec, coeffs: c.clone() }).collect()
    }
}

/// Right singular vectors of the sampled residual matrix whose singular
/// values fall below `tol·σ_max`.
#[allow(clippy::too_many_arguments)]
pub fn invariant_nullspace(
    particle: &ReferenceParticle,
    family: Family,
    spec: BasisSpec,
    n_samples: usize,
    tol: f64,
    seed: u64,
    exec: Execution,
) -> Result<NullSpace> {
    let cols = spec.len();
    if n_samples < 2 * cols {
        return Err(Error::Domain(format!("need at least {} samples for {cols} basis functions", 2 * cols)));
    }
    let mi = MassInertia::of(particle);
    let rows = exec.try_map(n_samples, |i| {
        let mut rng = task_rng(seed, i as u64);
        let v = random_velocity(&mut rng, &mi);
        let beta = random_beta(&mut rng);
        let r = residual_row(&spec, particle, &v, beta, family)?;
        Ok::<_, Error>((spec.eval(&Vec2::new(v[0], v[1]), v[4], beta.theta), r))
    })?;
    let gram = DMatrix::from_fn(n_samples, cols, |i, j| rows[i].0[j]);
    let gsv = gram.svd(false, false).singular_values;
    let cond = gsv.max() / gsv.min();
    if cond.is_nan() || cond >= 1e12 {
        return Err(Error::IllConditioned(format!("basis evaluation matrix has condition number {cond:e}; lower the degree or mode count")));
    }
    let a = DMatrix::from_fn(n_samples, cols, |i, j| rows[i].1[j]);
    let svd = a.svd(false, true);
    let vt = svd.v_t.ok_or_else(|| Error::Numerical("svd failed".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
    let singular_values: Vec<f64> = order.iter().map(|&k| svd.singular_values[k]).collect();
    let top = singular_values[0];
    let basis: Vec<Vec<f64>> = order
        .iter()
        .filter(|&&k| svd.singular_values[k] < tol * top)
        .map(|&k| vt.row(k).iter().copied().collect())
        .collect();
    Ok(NullSpace { spec, dimension: basis.len(), basis, singular_values })
}

/// Least-squares fit of `φ` to `a(ϑ) + b·v + c(m|v|² + Jω²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    /// Coefficients of `1, cos ϑ, sin ϑ, cos 2ϑ, …`.
    pub a: Vec<f64>,
    pub b: [f64; 2],
    pub c: f64,
    /// `|fit − φ| / |φ|` over the sample points.
    pub residual: f64,
}

pub fn decompose_invariant(phi: &CandidateInvariant, mi: &MassInertia, n_points: usize, seed: u64) -> Result<Decomposition> {
    let modes = phi.spec.fourier();
    let cols = modes.len() + 3;
    let mut rng = task_rng(seed, u64::MAX);
    let mut design = DMatrix::zeros(n_points, cols);
    let mut y = DVector::zeros(n_points);
    for i in 0..n_points {
        let v = random_velocity(&mut rng, mi);
        let theta = TAU * rng.random::<f64>();
        let lin = Vec2::new(v[0], v[1]);
        for (k, m) in modes.iter().enumerate() {
            design[(i, k)] = m.eval(theta);
        }
        design[(i, modes.len())] = lin.x;
        design[(i, modes.len() + 1)] = lin.y;
        design[(i, modes.len() + 2)] = mi.m * lin.norm_squared() + mi.j * v[4] * v[4];
        y[i] = phi.eval(&lin, v[4], theta);
    }
    let x = design.clone().svd(true, true).solve(&y, 1e-14).map_err(|e| Error::Numerical(e.to_string()))?;
    let fit = &design * &x;
    let scale = y.norm();
    let residual = if scale > 0.0 { (fit - &y).norm() / scale } else { 0.0 };
    Ok(Decomposition {
        a: x.rows(0, modes.len()).iter().copied().collect(),
        b: [x[modes.len()], x[modes.len() + 1]],
        c: x[modes.len() + 2],
        residual,
    })
}
