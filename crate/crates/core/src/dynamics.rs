//! Event-driven two-body hard-particle dynamics.
//!
//! Between collisions both bodies fly freely. Collision times are roots of
//! the separation `F`, found by stepping with `dt = F / L`, where `L` bounds
//! `|dF/dt|` along the flight, and then polishing a sign-change bracket by
//! bisection. At contact the elevation angle is `ψ = arg(x − x̄)`, and with
//! that convention `dF/dt` is a positive multiple of `γ_β·V`.

use crate::geometry::{collision_frame, elevation, separation, Beta, ReferenceParticle};
use crate::par::{task_rng, Execution};
use crate::scattering::{almost_physical, collision_normal, physical_scattering, MassInertia, ScatteringKind, TANGENTIAL_TOL};
use crate::scattering::Witness;
use crate::{e, perp, wrap, Error, Result, Vec2, Vec6};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Separations at or below this count as contact.
pub const CONTACT_TOL: f64 = 1e-10;
const TIME_TOL: f64 = 1e-13;
const MAX_STEPS: usize = 5_000_000;
const MAX_EVENTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemState {
    pub x: Vec2,
    pub theta: f64,
    pub x_bar: Vec2,
    pub theta_bar: f64,
    /// `[v, v̄, ω, ω̄]`.
    pub v: Vec6,
    pub t: f64,
    pub theta_unwrapped: f64,
    pub theta_bar_unwrapped: f64,
}

impl SystemState {
    pub fn new(x: Vec2, theta: f64, x_bar: Vec2, theta_bar: f64, v: Vec6) -> Self {
        Self { x, theta: wrap(theta), x_bar, theta_bar: wrap(theta_bar), v, t: 0.0, theta_unwrapped: theta, theta_bar_unwrapped: theta_bar }
    }

    pub fn lin(&self) -> Vec2 {
        Vec2::new(self.v[0], self.v[1])
    }

    pub fn lin_bar(&self) -> Vec2 {
        Vec2::new(self.v[2], self.v[3])
    }

    pub fn beta(&self) -> Beta {
        Beta::new(self.theta, self.theta_bar, elevation(&self.x, &self.x_bar))
    }

    /// Same configuration with all velocities negated.
    pub fn reversed(&self) -> Self {
        Self { v: -self.v, ..*self }
    }
}

/// Place the pair in contact at `β`: `x̄ = 0`, `x = d e(ψ)`.
pub fn contact_state(particle: &ReferenceParticle, beta: Beta, v: Vec6) -> Result<SystemState> {
    let frame = collision_frame(particle, beta)?;
    Ok(SystemState::new(frame.d * e(beta.psi), beta.theta, Vec2::zeros(), beta.theta_bar, v))
}

pub fn free_flight(state: &SystemState, dt: f64) -> SystemState {
    let mut s = *state;
    s.x += dt * state.lin();
    s.x_bar += dt * state.lin_bar();
    s.theta_unwrapped += dt * state.v[4];
    s.theta_bar_unwrapped += dt * state.v[5];
    s.theta = wrap(s.theta_unwrapped);
    s.theta_bar = wrap(s.theta_bar_unwrapped);
    s.t += dt;
    s
}

pub fn state_separation(particle: &ReferenceParticle, s: &SystemState) -> Result<f64> {
    separation(particle, &s.x, s.theta, &s.x_bar, s.theta_bar)
}

/// `(F, dF/dt)` at `s`.
pub fn separation_rate(particle: &ReferenceParticle, s: &SystemState) -> Result<(f64, f64)> {
    let z = s.x - s.x_bar;
    let dist = z.norm();
    if dist.is_nan() || dist <= 0.0 {
        return Err(Error::Domain("coincident centres".into()));
    }
    let frame = collision_frame(particle, s.beta())?;
    let zh = z / dist;
    let zdot = s.lin() - s.lin_bar();
    let psi_dot = perp(&zh).dot(&zdot) / dist;
    let d_dot = frame.dd_dtheta * (s.v[5] - s.v[4]) + frame.dd_dpsi * (psi_dot - s.v[4]);
    Ok((dist - frame.d, zh.dot(&zdot) - d_dot))
}

/// Upper bound on `|dF/dt|` valid for the whole free flight from `s`.
fn rate_bound(particle: &ReferenceParticle, s: &SystemState) -> f64 {
    let (rmax, rmin) = (particle.r_max(), particle.r_min());
    let kappa = rmax / rmin;
    let dpsi_max = 2.0 * rmax * (kappa * kappa - 1.0).max(0.0).sqrt();
    let dtheta_max = rmax * kappa;
    let rel = (s.lin() - s.lin_bar()).norm();
    rel * (1.0 + dpsi_max / (2.0 * rmin)) + dpsi_max * s.v[4].abs() + dtheta_max * (s.v[5] - s.v[4]).abs()
}

fn polish(particle: &ReferenceParticle, s: &SystemState, mut lo: f64, mut hi: f64) -> Result<f64> {
    for _ in 0..200 {
        if hi - lo <= TIME_TOL * (1.0 + s.t.abs() + hi) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if state_separation(particle, &free_flight(s, mid))? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Time until the next contact, if one occurs within `horizon`.
///
/// Returns `Some(0.0)` when the pair is already in contact with approaching
/// velocities. The returned time is the last bisection point with `F > 0`,
/// so the state there satisfies `0 < F ≤ CONTACT_TOL`.
pub fn next_collision_time(particle: &ReferenceParticle, state: &SystemState, horizon: f64) -> Result<Option<f64>> {
    let lip = rate_bound(particle, state);
    let scale = particle.r_max();
    let min_step = 1e-9 * scale / lip.max(1e-300);
    let mut s = 0.0;
    for _ in 0..MAX_STEPS {
        let cur = free_flight(state, s);
        let (f, fdot) = separation_rate(particle, &cur)?;
        if f <= CONTACT_TOL && fdot < 0.0 {
            return Ok(Some(s));
        }
        if lip == 0.0 {
            return Ok(None);
        }
        if fdot < 0.0 && f < 1e-2 * scale {
            let hi = (s + 2.0 * f / -fdot).min(horizon);
            if hi > s && state_separation(particle, &free_flight(state, hi))? < 0.0 {
                return polish(particle, state, s, hi).map(Some);
            }
        }
        let next = s + (f.max(0.0) / lip).max(min_step);
        if next >= horizon {
            if state_separation(particle, &free_flight(state, horizon))? <= 0.0 {
                return polish(particle, state, s, horizon).map(Some);
            }
            return Ok(None);
        }
        if state_separation(particle, &free_flight(state, next))? <= 0.0 {
            return polish(particle, state, s, next).map(Some);
        }
        s = next;
    }
    Err(Error::Numerical(format!("collision search stalled at t = {}", state.t + s)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Physical,
    AlmostPhysical,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub beta: Beta,
    pub v_pre: Vec6,
    pub v_post: Vec6,
    pub kind: ScatteringKind,
    pub gamma_dot_pre: f64,
    pub gamma_dot_post: f64,
    /// State just after the event.
    pub state: SystemState,
}

/// Apply the chosen scattering map at a contact.
pub fn resolve_collision(particle: &ReferenceParticle, state: &SystemState, family: Family) -> Result<(SystemState, Event)> {
    let f = state_separation(particle, state)?;
    if f > CONTACT_TOL {
        return Err(Error::Contract(format!("resolve_collision called with separation {f:e}")));
    }
    let beta = state.beta();
    let frame = collision_frame(particle, beta)?;
    let mi = MassInertia::of(particle);
    let normal = collision_normal(&frame, &mi);
    let gamma_dot_pre = normal.gamma.dot(&state.v);
    if gamma_dot_pre > TANGENTIAL_TOL {
        return Err(Error::Contract(format!("velocity is post-collisional (γ·V = {gamma_dot_pre:e})")));
    }
    let s = match family {
        Family::Physical => physical_scattering(&frame, &mi),
        Family::AlmostPhysical => almost_physical(&frame, &mi),
    };
    let v_post = s.apply(&state.v);
    let post = SystemState { v: v_post, ..*state };
    let event = Event {
        time: state.t,
        beta,
        v_pre: state.v,
        v_post,
        kind: s.kind,
        gamma_dot_pre,
        gamma_dot_post: normal.gamma.dot(&v_post),
        state: post,
    };
    Ok((post, event))
}

/// Total momentum, kinetic energy `|MV|²` and angular momentum about the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conserved {
    pub p: [f64; 2],
    pub e: f64,
    pub a: f64,
}

pub fn conserved_quantities(state: &SystemState, mi: &MassInertia) -> Conserved {
    let (v, vb) = (state.lin(), state.lin_bar());
    let p = mi.m * (v + vb);
    let e = mi.m * (v.norm_squared() + vb.norm_squared()) + mi.j * (state.v[4].powi(2) + state.v[5].powi(2));
    let a = mi.m * (perp(&state.x).dot(&v) + perp(&state.x_bar).dot(&vb)) + mi.j * (state.v[4] + state.v[5]);
    Conserved { p: [p.x, p.y], e, a }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub state: SystemState,
    pub conserved: Conserved,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub initial: SystemState,
    pub horizon: f64,
    pub events: Vec<Event>,
    pub samples: Vec<Sample>,
    pub final_state: SystemState,
    /// Set when a resolved velocity was still approaching, i.e. the map in
    /// use let the bodies overlap. The simulation stops there.
    pub penetration: Option<f64>,
}

/// Largest relative deviations from the initial conserved quantities.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Drift {
    pub momentum: f64,
    pub energy: f64,
    pub angular: f64,
}

impl Trajectory {
    /// State at time `t`, using post-collision velocities at event times.
    pub fn state_at(&self, t: f64) -> SystemState {
        let base = self.events.iter().rev().find(|ev| ev.time <= t).map_or(self.initial, |ev| ev.state);
        free_flight(&base, t - base.t)
    }

    /// Drift of `P`, `E` and `A` over samples and event post-states. Momentum
    /// and angular momentum are scaled by `√(mE₀)` and `√(mE₀)·R` so the
    /// measure stays meaningful when the initial values vanish.
    pub fn drift(&self, particle: &ReferenceParticle) -> Drift {
        let mi = MassInertia::of(particle);
        let c0 = conserved_quantities(&self.initial, &mi);
        let e_scale = if c0.e > 0.0 { c0.e } else { 1.0 };
        let p_scale = (mi.m * e_scale).sqrt();
        let reach = self.initial.x.norm().max(self.initial.x_bar.norm()).max(particle.r_max());
        let states = self.samples.iter().map(|s| s.state).chain(self.events.iter().map(|ev| ev.state)).chain([self.final_state]);
        let mut d = Drift::default();
        for s in states {
            let c = conserved_quantities(&s, &mi);
            let dp = (c.p[0] - c0.p[0]).hypot(c.p[1] - c0.p[1]);
            d.momentum = d.momentum.max(dp / p_scale);
            d.energy = d.energy.max((c.e - c0.e).abs() / e_scale);
            d.angular = d.angular.max((c.a - c0.a).abs() / (p_scale * reach));
        }
        d
    }

    /// Minimum of `F` over a uniform grid of `n` times plus points just
    /// before and after every event.
    pub fn min_separation(&self, particle: &ReferenceParticle, n: usize) -> Result<f64> {
        let end = self.final_state.t;
        let mut times: Vec<f64> = (0..=n).map(|k| end * k as f64 / n.max(1) as f64).collect();
        for ev in &self.events {
            for dt in [-1e-6, -1e-9, 0.0, 1e-9, 1e-6] {
                let t = ev.time + dt;
                if (0.0..=end).contains(&t) {
                    times.push(t);
                }
            }
        }
        let mut lo = f64::INFINITY;
        for t in times {
            lo = lo.min(state_separation(particle, &self.state_at(t))?);
        }
        Ok(lo)
    }
}

/// Run the pair to time `horizon`, recording a sample every `sample_dt`.
pub fn simulate(particle: &ReferenceParticle, initial: &SystemState, horizon: f64, family: Family, sample_dt: f64) -> Result<Trajectory> {
    if !(horizon >= 0.0 && sample_dt > 0.0) {
        return Err(Error::Domain(format!("need horizon >= 0 and sample_dt > 0, got {horizon}, {sample_dt}")));
    }
    let mi = MassInertia::of(particle);
    let f0 = state_separation(particle, initial)?;
    if f0 < -1e-8 {
        return Err(Error::Domain(format!("initial bodies overlap (F = {f0:e})")));
    }
    let t_end = initial.t + horizon;
    let mut state = *initial;
    let mut traj = Trajectory { initial: *initial, horizon, events: vec![], samples: vec![], final_state: state, penetration: None };
    let mut k = 0usize;
    // Samples before `upto`, or up to and including it when `inclusive`. A
    // sample that coincides with a collision is taken after it.
    let mut record = |traj: &mut Trajectory, base: &SystemState, upto: f64, inclusive: bool| {
        loop {
            let ts = initial.t + k as f64 * sample_dt;
            if ts > upto || (!inclusive && ts >= upto) {
                break;
            }
            let s = free_flight(base, ts - base.t);
            traj.samples.push(Sample { state: s, conserved: conserved_quantities(&s, &mi) });
            k += 1;
        }
    };
    loop {
        let remaining = t_end - state.t;
        let hit = next_collision_time(particle, &state, remaining)?;
        let dt = hit.unwrap_or(remaining);
        match hit {
            Some(_) => record(&mut traj, &state, state.t + dt, false),
            None => record(&mut traj, &state, t_end + 1e-12, true),
        }
        state = free_flight(&state, dt);
        if hit.is_none() {
            break;
        }
        let (post, event) = resolve_collision(particle, &state, family)?;
        let stuck = event.gamma_dot_post < -TANGENTIAL_TOL;
        traj.events.push(event);
        state = post;
        if stuck {
            traj.penetration = Some(state.t);
            break;
        }
        if traj.events.len() > MAX_EVENTS {
            return Err(Error::Numerical(format!("more than {MAX_EVENTS} events before t = {}", state.t)));
        }
    }
    traj.final_state = state;
    Ok(traj)
}

pub fn simulate_batch(
    particle: &ReferenceParticle,
    initial: &[SystemState],
    horizon: f64,
    family: Family,
    sample_dt: f64,
    exec: Execution,
) -> Vec<Result<Trajectory>> {
    exec.map(initial.len(), |i| simulate(particle, &initial[i], horizon, family, sample_dt))
}

/// Seeded random initial condition: disjoint bodies a few radii apart with
/// velocities biased towards each other, so most runs contain collisions.
pub fn random_state(particle: &ReferenceParticle, seed: u64, index: u64) -> SystemState {
    let mut rng = task_rng(seed, index);
    let r = particle.r_max();
    let dir = e(rng.random::<f64>() * TAU);
    let gap = r * (2.2 + 1.5 * rng.random::<f64>());
    let mut g = || -> f64 { rng.sample(StandardNormal) };
    let (sm, sj) = (particle.m().sqrt(), particle.j().sqrt());
    let closing = 0.5 + 0.5 * g().abs();
    let v = Vec6::new(
        closing * dir.x + 0.3 * g(),
        closing * dir.y + 0.3 * g(),
        -closing * dir.x + 0.3 * g(),
        -closing * dir.y + 0.3 * g(),
        0.5 * g() * sm / sj,
        0.5 * g() * sm / sj,
    );
    let (theta, theta_bar) = (TAU * g().abs().fract(), TAU * g().abs().fract());
    SystemState::new(Vec2::zeros(), theta, gap * dir, theta_bar, v)
}

/// Separation after flying a witness configuration freely for `dt`.
pub fn witness_probe(particle: &ReferenceParticle, witness: &Witness, dt: f64) -> Result<f64> {
    let s = contact_state(particle, witness.beta, witness.velocity)?;
    state_separation(particle, &free_flight(&s, dt))
}
