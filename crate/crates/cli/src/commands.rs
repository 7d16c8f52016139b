//! One function per subcommand. Each fills in its defaults, runs, writes its
//! report and returns whether the optional checks held.

use crate::config::{fixed, Format, RunConfig};
use crate::output::{csv_table, json_line, num, open};
use crate::CliError;
use convex_scatter::dynamics::{self, conserved_quantities, simulate, witness_probe, Family, SystemState, Trajectory};
use convex_scatter::geometry::{collision_frame, Beta};
use convex_scatter::invariants::{self as inv, BasisSpec};
use convex_scatter::scattering::{self as sc, MassInertia};
use convex_scatter::{Vec2, Vec6};
use serde::Serialize;
use std::f64::consts::PI;
use std::io::Write;

#[derive(Serialize)]
struct Header<'a> {
    schema: &'static str,
    config: &'a RunConfig,
}

#[derive(Serialize)]
struct Report<'a, T> {
    schema: &'static str,
    config: &'a RunConfig,
    #[serde(flatten)]
    body: T,
}

fn emit<T: Serialize>(cfg: &RunConfig, schema: &'static str, body: T) -> Result<(), CliError> {
    let mut w = open(cfg.out.as_deref())?;
    json_line(&mut w, &Report { schema, config: cfg, body })?;
    w.flush().map_err(crate::output::io_err)
}

fn v6(v: &[f64; 6]) -> Vec6 {
    Vec6::from_column_slice(v)
}

fn pair(v: Vec2) -> [f64; 2] {
    [v.x, v.y]
}

fn six(v: &Vec6) -> [f64; 6] {
    [v[0], v[1], v[2], v[3], v[4], v[5]]
}

#[derive(Debug, Serialize)]
pub struct FrameReport {
    pub beta: [f64; 3],
    pub d: f64,
    pub p: [f64; 2],
    pub q: [f64; 2],
    pub n: [f64; 2],
    #[serde(rename = "N")]
    pub n_excl: [f64; 2],
    pub n_tilde: [f64; 2],
    pub r: [f64; 2],
    pub dd_dpsi: f64,
    pub dd_dtheta: f64,
    pub lambda: f64,
    pub gamma: [f64; 6],
}

impl FrameReport {
    const COLUMNS: [&'static str; 22] = [
        "theta", "theta_bar", "psi", "d", "p_x", "p_y", "q_x", "q_y", "n_x", "n_y", "N_x", "N_y", "n_tilde_x", "n_tilde_y", "r_x", "r_y",
        "dd_dpsi", "dd_dtheta", "lambda", "gamma_0", "gamma_1", "gamma_2",
    ];

    fn row(&self) -> Vec<f64> {
        let mut r = self.beta.to_vec();
        r.push(self.d);
        for v in [self.p, self.q, self.n, self.n_excl, self.n_tilde, self.r] {
            r.extend(v);
        }
        r.extend([self.dd_dpsi, self.dd_dtheta, self.lambda]);
        r.extend(self.gamma);
        r
    }

    fn header() -> Vec<String> {
        let mut h: Vec<String> = Self::COLUMNS.iter().map(|s| s.to_string()).collect();
        h.extend(["gamma_3", "gamma_4", "gamma_5"].map(String::from));
        h
    }
}

pub fn contact(cfg: &mut RunConfig, check: bool) -> Result<bool, CliError> {
    let particle = cfg.particle()?;
    let [t, tb, psi] = fixed(&mut cfg.beta, "beta", Some([0.0; 3]))?;
    let tol = cfg.tol(1e-6)?;
    let format = cfg.format();
    let f = collision_frame(&particle, Beta::new(t, tb, psi))?;
    let mi = MassInertia::of(&particle);
    let normal = sc::collision_normal(&f, &mi);
    let report = FrameReport {
        beta: [f.beta.theta, f.beta.theta_bar, f.beta.psi],
        d: f.d,
        p: pair(f.p),
        q: pair(f.q),
        n: pair(f.n),
        n_excl: pair(f.n_excl),
        n_tilde: pair(f.n_tilde),
        r: pair(f.r),
        dd_dpsi: f.dd_dpsi,
        dd_dtheta: f.dd_dtheta,
        lambda: normal.lambda,
        gamma: six(&normal.gamma),
    };
    let identity = (f.d * convex_scatter::perp(&f.e_psi()).dot(&f.n_tilde) + f.dd_dpsi).abs();
    let unit = (f.n.norm() - 1.0).abs().max((f.n_excl.norm() - 1.0).abs());
    let ok = identity <= tol && unit <= 1e-12;
    #[derive(Serialize)]
    struct Body<'a> {
        frame: &'a FrameReport,
        identity_residual: f64,
        unit_error: f64,
    }
    match format {
        Format::Jsonl => emit(cfg, "cscat.contact/1", Body { frame: &report, identity_residual: identity, unit_error: unit })?,
        Format::Csv => csv_table(open(cfg.out.as_deref())?, &FrameReport::header(), [report.row().into_iter().map(num).collect()])?,
    }
    Ok(!check || ok)
}

pub fn scatter(cfg: &mut RunConfig, check: bool) -> Result<bool, CliError> {
    let particle = cfg.particle()?;
    let [t, tb, psi] = fixed(&mut cfg.beta, "beta", Some([0.0; 3]))?;
    let family: Family = (*cfg.family.get_or_insert(crate::config::FamilyArg::Physical)).into();
    let tol = cfg.tol(1e-10)?;
    let format = cfg.format();
    let velocity = match cfg.velocity {
        Some(_) => Some(v6(&fixed::<6>(&mut cfg.velocity, "velocity", None)?)),
        None => None,
    };
    let mi = MassInertia::of(&particle);
    let frame = collision_frame(&particle, Beta::new(t, tb, psi))?;
    let s = match family {
        Family::Physical => sc::physical_scattering(&frame, &mi),
        Family::AlmostPhysical => sc::almost_physical(&frame, &mi),
    };
    let block = sc::disk_block_matrix(frame.beta.psi);
    let disk_block = (s.matrix - block.matrix).amax() <= 1e-10;
    let (inv_err, orth_err) = (s.involution_error(), s.orthogonality_error(&mi));

    #[derive(Serialize)]
    struct Applied {
        pre: [f64; 6],
        post: [f64; 6],
        classification: sc::Classification,
        momentum_error: f64,
        energy_error: f64,
    }
    let applied = velocity.map(|v| {
        let w = s.apply(&v);
        let em = inv::energy_momentum(&v, &mi);
        let (de, dp) = em.deviation(&w, &mi);
        Applied {
            pre: six(&v),
            post: six(&w),
            classification: sc::classify(&v, &sc::collision_normal(&frame, &mi)),
            momentum_error: dp,
            energy_error: de,
        }
    });
    let ok = inv_err <= tol && orth_err <= tol && applied.as_ref().is_none_or(|a| a.momentum_error <= tol && a.energy_error <= tol);

    #[derive(Serialize)]
    struct Body {
        kind: sc::ScatteringKind,
        matrix: Vec<f64>,
        involution_error: f64,
        orthogonality_error: f64,
        disk_block: bool,
        velocity: Option<Applied>,
    }
    match format {
        Format::Jsonl => emit(
            cfg,
            "cscat.scatter/1",
            Body {
                kind: s.kind,
                matrix: s.row_major().to_vec(),
                involution_error: inv_err,
                orthogonality_error: orth_err,
                disk_block,
                velocity: applied,
            },
        )?,
        Format::Csv => {
            let header: Vec<String> = std::iter::once("row".to_string()).chain((0..6).map(|j| format!("c{j}"))).collect();
            let rows = (0..6).map(|i| std::iter::once(i.to_string()).chain((0..6).map(|j| num(s.matrix[(i, j)]))).collect());
            csv_table(open(cfg.out.as_deref())?, &header, rows)?;
        }
    }
    Ok(!check || ok)
}

#[derive(Serialize)]
struct SampleRecord {
    r#type: &'static str,
    t: f64,
    x: [f64; 2],
    theta: f64,
    x_bar: [f64; 2],
    theta_bar: f64,
    v: [f64; 6],
    p: [f64; 2],
    e: f64,
    a: f64,
}

impl SampleRecord {
    const HEADER: [&'static str; 17] =
        ["t", "x_1", "x_2", "theta", "x_bar_1", "x_bar_2", "theta_bar", "v_1", "v_2", "v_bar_1", "v_bar_2", "omega", "omega_bar", "p_1", "p_2", "e", "a"];

    fn row(&self) -> Vec<String> {
        let mut r = vec![self.t];
        r.extend(self.x);
        r.push(self.theta);
        r.extend(self.x_bar);
        r.push(self.theta_bar);
        r.extend(self.v);
        r.extend(self.p);
        r.extend([self.e, self.a]);
        r.into_iter().map(num).collect()
    }
}

#[derive(Serialize)]
struct EventRecord {
    r#type: &'static str,
    index: usize,
    time: f64,
    beta: [f64; 3],
    v_pre: [f64; 6],
    v_post: [f64; 6],
    gamma_dot_pre: f64,
    gamma_dot_post: f64,
}

impl EventRecord {
    const HEADER: [&'static str; 18] = [
        "index", "time", "theta", "theta_bar", "psi", "pre_1", "pre_2", "pre_3", "pre_4", "pre_5", "pre_6", "post_1", "post_2", "post_3",
        "post_4", "post_5", "post_6", "gamma_dot_pre",
    ];

    fn row(&self) -> Vec<String> {
        let mut r = vec![self.index as f64, self.time];
        r.extend(self.beta);
        r.extend(self.v_pre);
        r.extend(self.v_post);
        r.push(self.gamma_dot_pre);
        r.push(self.gamma_dot_post);
        r.into_iter().map(num).collect()
    }

    fn header() -> Vec<String> {
        let mut h: Vec<String> = Self::HEADER.iter().map(|s| s.to_string()).collect();
        h.push("gamma_dot_post".into());
        h
    }
}

#[derive(Serialize)]
struct Summary {
    r#type: &'static str,
    events: usize,
    drift: dynamics::Drift,
    min_separation: f64,
    penetration: Option<f64>,
    final_time: f64,
}

fn records(traj: &Trajectory, mi: &MassInertia) -> (Vec<SampleRecord>, Vec<EventRecord>) {
    let samples = traj
        .samples
        .iter()
        .map(|s| {
            let st = &s.state;
            let c = conserved_quantities(st, mi);
            SampleRecord {
                r#type: "sample",
                t: st.t,
                x: pair(st.x),
                theta: st.theta,
                x_bar: pair(st.x_bar),
                theta_bar: st.theta_bar,
                v: six(&st.v),
                p: c.p,
                e: c.e,
                a: c.a,
            }
        })
        .collect();
    let events = traj
        .events
        .iter()
        .enumerate()
        .map(|(index, e)| EventRecord {
            r#type: "event",
            index,
            time: e.time,
            beta: [e.beta.theta, e.beta.theta_bar, e.beta.psi],
            v_pre: six(&e.v_pre),
            v_post: six(&e.v_post),
            gamma_dot_pre: e.gamma_dot_pre,
            gamma_dot_post: e.gamma_dot_post,
        })
        .collect();
    (samples, events)
}

pub fn simulate_cmd(cfg: &mut RunConfig, check: bool) -> Result<bool, CliError> {
    let particle = cfg.particle()?;
    let seed = *cfg.seed.get_or_insert(1);
    let initial = match (&cfg.state, &cfg.velocity) {
        (None, None) => {
            let s = dynamics::random_state(&particle, seed, 0);
            cfg.state = Some(vec![s.x.x, s.x.y, s.theta, s.x_bar.x, s.x_bar.y, s.theta_bar]);
            cfg.velocity = Some(six(&s.v).to_vec());
            s
        }
        _ => {
            let s = fixed::<6>(&mut cfg.state, "state", None)?;
            let v = fixed::<6>(&mut cfg.velocity, "velocity", None)?;
            SystemState::new(Vec2::new(s[0], s[1]), s[2], Vec2::new(s[3], s[4]), s[5], v6(&v))
        }
    };
    let horizon = *cfg.time.get_or_insert(10.0);
    let sample_dt = *cfg.sample_dt.get_or_insert(if horizon > 0.0 { horizon / 100.0 } else { 1.0 });
    let family: Family = (*cfg.family.get_or_insert(crate::config::FamilyArg::Physical)).into();
    let tol = cfg.tol(1e-9)?;
    let format = cfg.format();
    let traj = simulate(&particle, &initial, horizon, family, sample_dt)?;
    let mi = MassInertia::of(&particle);
    let drift = traj.drift(&particle);
    let min_separation = traj.min_separation(&particle, 1000)?;
    let summary = Summary {
        r#type: "summary",
        events: traj.events.len(),
        drift,
        min_separation,
        penetration: traj.penetration,
        final_time: traj.final_state.t,
    };
    let (samples, events) = records(&traj, &mi);

    let mut w = open(cfg.out.as_deref())?;
    match format {
        Format::Jsonl => {
            json_line(&mut w, &Header { schema: "cscat.simulate/1", config: cfg })?;
            let mut ev = events.iter().peekable();
            for s in &samples {
                while let Some(e) = ev.next_if(|e| e.time <= s.t) {
                    json_line(&mut w, e)?;
                }
                json_line(&mut w, s)?;
            }
            for e in ev {
                json_line(&mut w, e)?;
            }
            json_line(&mut w, &summary)?;
        }
        Format::Csv => {
            let header: Vec<String> = SampleRecord::HEADER.iter().map(|s| s.to_string()).collect();
            csv_table(&mut w, &header, samples.iter().map(SampleRecord::row))?;
            let mut err = std::io::stderr().lock();
            json_line(&mut err, &Report { schema: "cscat.simulate/1", config: cfg, body: &summary })?;
        }
    }
    w.flush().map_err(crate::output::io_err)?;
    if let Some(path) = cfg.events.as_deref() {
        let mut ew = open(Some(path))?;
        match format {
            Format::Jsonl => {
                for e in &events {
                    json_line(&mut ew, e)?;
                }
            }
            Format::Csv => csv_table(&mut ew, &EventRecord::header(), events.iter().map(EventRecord::row))?,
        }
        ew.flush().map_err(crate::output::io_err)?;
    }
    let worst = drift.momentum.max(drift.energy).max(drift.angular);
    Ok(!check || (worst <= tol && min_separation >= -1e-8 && traj.penetration.is_none()))
}

pub fn orbit(cfg: &mut RunConfig, check: bool) -> Result<bool, CliError> {
    let particle = cfg.particle()?;
    let [t, tb] = fixed(&mut cfg.orient, "orient", Some([0.3, 1.2]))?;
    let v = v6(&fixed(&mut cfg.velocity, "velocity", Some([1.0, 0.3, -0.2, 0.5, 0.4, -0.7]))?);
    let seed = *cfg.seed.get_or_insert(1);
    let samples = *cfg.samples.get_or_insert(100_000);
    let word = *cfg.word_length.get_or_insert(32);
    let k = *cfg.bins.get_or_insert(4);
    if k == 0 {
        return Err(CliError::Config("--bins must be positive".into()));
    }
    let exec = cfg.execution();
    let format = cfg.format();
    let mi = MassInertia::of(&particle);
    let em = inv::energy_momentum(&v, &mi);
    let pts = inv::orbit_sample(&particle, t, tb, &em, seed, word, samples, exec)?;
    let sphere = pts.iter().map(|v| inv::canonical_map(v, &em, &mi)).collect::<convex_scatter::Result<Vec<_>>>()?;
    let counts = inv::coverage_table(&sphere, k);
    let coverage = inv::orbit_coverage(&sphere, k);

    #[derive(Serialize)]
    struct Body {
        energy: f64,
        momentum: [f64; 2],
        bins: usize,
        coverage: f64,
        counts: Vec<usize>,
    }
    match format {
        Format::Jsonl => emit(cfg, "cscat.orbit/1", Body { energy: em.e, momentum: pair(em.p), bins: counts.len(), coverage, counts })?,
        Format::Csv => {
            let header = ["bin", "t_index", "xi1_index", "xi2_index", "count"].map(String::from);
            let rows = counts.iter().enumerate().map(|(b, c)| {
                let (it, rest) = (b / (4 * k * k), b % (4 * k * k));
                [b, it, rest / (2 * k), rest % (2 * k), *c].map(|x| x.to_string()).to_vec()
            });
            csv_table(open(cfg.out.as_deref())?, &header, rows)?;
        }
    }
    Ok(!check || coverage >= 0.99)
}

pub fn invariants(cfg: &mut RunConfig, check: bool) -> Result<bool, CliError> {
    let particle = cfg.particle()?;
    let spec = BasisSpec { degree: *cfg.degree.get_or_insert(2), modes: *cfg.modes.get_or_insert(1) };
    let samples = *cfg.samples.get_or_insert(2000);
    let seed = *cfg.seed.get_or_insert(1);
    let tol = cfg.tol(1e-8)?;
    let family: Family = (*cfg.family.get_or_insert(crate::config::FamilyArg::Physical)).into();
    let exec = cfg.execution();
    let format = cfg.format();
    let mi = MassInertia::of(&particle);
    let ns = inv::invariant_nullspace(&particle, family, spec, samples, tol, seed, exec)?;
    let decompositions = ns
        .candidates()
        .iter()
        .map(|c| inv::decompose_invariant(c, &mi, 500, seed))
        .collect::<convex_scatter::Result<Vec<_>>>()?;
    let ok = decompositions.iter().all(|d| d.residual <= 1e-6);

    #[derive(Serialize)]
    struct NullVector<'a> {
        coefficients: &'a [f64],
        decomposition: &'a inv::Decomposition,
    }
    #[derive(Serialize)]
    struct Body<'a> {
        labels: Vec<String>,
        dimension: usize,
        singular_values: &'a [f64],
        null_vectors: Vec<NullVector<'a>>,
    }
    match format {
        Format::Jsonl => {
            let null_vectors =
                ns.basis.iter().zip(&decompositions).map(|(c, d)| NullVector { coefficients: c, decomposition: d }).collect();
            emit(cfg, "cscat.invariants/1", Body { labels: spec.labels(), dimension: ns.dimension, singular_values: &ns.singular_values, null_vectors })?
        }
        Format::Csv => {
            let header: Vec<String> = ["vector".to_string(), "residual".to_string()].into_iter().chain(spec.labels()).collect();
            let rows = ns.basis.iter().zip(&decompositions).enumerate().map(|(i, (c, d))| {
                [i.to_string(), num(d.residual)].into_iter().chain(c.iter().copied().map(num)).collect()
            });
            csv_table(open(cfg.out.as_deref())?, &header, rows)?;
        }
    }
    Ok(!check || ok)
}

pub fn witness(cfg: &mut RunConfig, check: bool) -> Result<bool, CliError> {
    let particle = cfg.particle()?;
    let budget = *cfg.samples.get_or_insert(4096);
    let exec = cfg.execution();
    let format = cfg.format();
    let found = sc::find_unphysical_witness(&particle, budget, exec)?;
    let probe_dt = 1e-3 * particle.r_max();

    #[derive(Serialize)]
    struct Found {
        beta: [f64; 3],
        velocity: [f64; 6],
        gamma_dot_v: f64,
        fixed_point_error: f64,
        separation_after_flight: f64,
    }
    let found = match found {
        Some(w) => Some(Found {
            beta: [w.beta.theta, w.beta.theta_bar, w.beta.psi],
            velocity: six(&w.velocity),
            gamma_dot_v: w.gamma_dot_v,
            fixed_point_error: w.fixed_point_error,
            separation_after_flight: witness_probe(&particle, &w, probe_dt)?,
        }),
        None => None,
    };
    let ok = found.as_ref().is_none_or(|f| f.gamma_dot_v < -1e-6 && f.fixed_point_error <= 1e-10 && f.separation_after_flight < 0.0);

    #[derive(Serialize)]
    struct Body {
        outcome: &'static str,
        witness: Option<Found>,
    }
    match format {
        Format::Jsonl => emit(cfg, "cscat.witness/1", Body { outcome: if found.is_some() { "found" } else { "none found" }, witness: found })?,
        Format::Csv => {
            let header = ["theta", "theta_bar", "psi", "v_1", "v_2", "v_bar_1", "v_bar_2", "omega", "omega_bar", "gamma_dot_v", "fixed_point_error", "separation_after_flight"]
                .map(String::from);
            let rows = found.iter().map(|f| {
                f.beta.iter().chain(&f.velocity).copied().chain([f.gamma_dot_v, f.fixed_point_error, f.separation_after_flight]).map(num).collect()
            });
            csv_table(open(cfg.out.as_deref())?, &header, rows)?;
        }
    }
    Ok(!check || ok)
}

pub fn span(cfg: &mut RunConfig, check: bool) -> Result<bool, CliError> {
    let particle = cfg.particle()?;
    let n = *cfg.grid.get_or_insert(16);
    let samples = *cfg.samples.get_or_insert(64);
    let exec = cfg.execution();
    let format = cfg.format();
    let grid = inv::span_rank_grid(&particle, n, samples, exec)?;
    // Aligned and anti-aligned pairs are point-symmetric about the contact,
    // which costs one rank; the check excludes them.
    let aligned = |t: f64, tb: f64| ((tb - t) / PI - ((tb - t) / PI).round()).abs() < 1e-12;
    let expected = if particle.is_disk() { 2 } else { 4 };
    let ok = grid.iter().all(|&(t, tb, r)| r == expected || (!particle.is_disk() && aligned(t, tb)));

    #[derive(Serialize)]
    struct Point {
        theta: f64,
        theta_bar: f64,
        rank: usize,
    }
    #[derive(Serialize)]
    struct Body {
        min_rank: usize,
        max_rank: usize,
        points: Vec<Point>,
    }
    match format {
        Format::Jsonl => emit(
            cfg,
            "cscat.span/1",
            Body {
                min_rank: grid.iter().map(|g| g.2).min().unwrap_or(0),
                max_rank: grid.iter().map(|g| g.2).max().unwrap_or(0),
                points: grid.iter().map(|&(theta, theta_bar, rank)| Point { theta, theta_bar, rank }).collect(),
            },
        )?,
        Format::Csv => {
            let header = ["theta", "theta_bar", "rank"].map(String::from);
            csv_table(open(cfg.out.as_deref())?, &header, grid.iter().map(|&(t, tb, r)| vec![num(t), num(tb), r.to_string()]))?;
        }
    }
    Ok(!check || ok)
}
