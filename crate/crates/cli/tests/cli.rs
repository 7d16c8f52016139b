//! End-to-end runs of the `cscat` binary.

use convex_scatter::geometry::{collision_frame, Beta};
use convex_scatter::scattering::{physical_scattering, MassInertia};
use convex_scatter::ReferenceParticle;
use serde_json::Value;
use std::process::{Command, Output};

fn cscat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cscat")).args(args).output().expect("run cscat")
}

fn json(args: &[&str]) -> Value {
    let out = cscat(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("one JSON record")
}

fn lines(out: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&out.stdout).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

fn vec_of(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(f).collect()
}

#[test]
fn disk_contact_distance_is_diameter() {
    for beta in ["0,0,0", "0.3,2.1,-1.7", "5,1,3"] {
        let r = json(&["contact", "--particle", "disk:0.75", "--beta", beta]);
        assert!((f(&r["frame"]["d"]) - 1.5).abs() < 1e-14);
        assert_eq!(r["schema"], "cscat.contact/1");
    }
}

#[test]
fn aligned_ellipses_touch_at_twice_the_major_axis() {
    let r = json(&["contact", "--particle", "ellipse:2,1", "--beta", "0,0,0"]);
    assert!((f(&r["frame"]["d"]) - 4.0).abs() < 1e-12);
}

#[test]
fn contact_report_reads_back() {
    let p = ReferenceParticle::ellipse(2.0, 1.0).unwrap();
    let frame = collision_frame(&p, Beta::new(0.4, 2.3, 5.1)).unwrap();
    let r = json(&["contact", "--particle", "ellipse:2,1", "--beta", "0.4,2.3,5.1"]);
    let fr = &r["frame"];
    assert!((f(&fr["d"]) - frame.d).abs() < 1e-12);
    for (key, v) in [("p", frame.p), ("q", frame.q), ("n", frame.n), ("N", frame.n_excl), ("r", frame.r)] {
        let got = vec_of(&fr[key]);
        assert!((got[0] - v.x).abs() < 1e-12 && (got[1] - v.y).abs() < 1e-12, "{key}");
    }

    let out = cscat(&["contact", "--particle", "ellipse:2,1", "--beta", "0.4,2.3,5.1", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rows = text.lines();
    let header: Vec<&str> = rows.next().unwrap().split(',').collect();
    let row: Vec<f64> = rows.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    let col = |name: &str| row[header.iter().position(|h| *h == name).unwrap()];
    assert!((col("d") - frame.d).abs() < 1e-12);
    assert!((col("N_x") - frame.n_excl.x).abs() < 1e-12);
}

#[test]
fn scatter_reports_disk_block_and_reads_back() {
    let r = json(&["scatter", "--particle", "disk:1", "--beta", "0.2,1.4,2.5", "--check"]);
    assert_eq!(r["disk_block"], true);
    let r = json(&["scatter", "--particle", "ellipse:2,1", "--beta", "0.2,1.4,2.5", "--check"]);
    assert_eq!(r["disk_block"], false);
    assert!(f(&r["involution_error"]) < 1e-10);
    let p = ReferenceParticle::ellipse(2.0, 1.0).unwrap();
    let s = physical_scattering(&collision_frame(&p, Beta::new(0.2, 1.4, 2.5)).unwrap(), &MassInertia::of(&p));
    for (a, b) in vec_of(&r["matrix"]).iter().zip(s.row_major()) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn scatter_applies_velocity() {
    let r = json(&["scatter", "--particle", "ellipse:2,1", "--beta", "0,0,0", "--velocity=-1,0,1,0,0,0"]);
    let v = &r["velocity"];
    assert_eq!(v["classification"], "pre_collisional");
    assert!(f(&v["energy_error"]) < 1e-12);
}

#[test]
fn head_on_disks_collide_once_at_unit_time() {
    let out = cscat(&[
        "simulate", "--particle", "disk:1", "--state=-2,0,0,2,0,0", "--velocity=1,0,-1,0,0,0", "--time", "2", "--check",
    ]);
    assert!(out.status.success());
    let recs = lines(&out);
    assert_eq!(recs[0]["schema"], "cscat.simulate/1");
    let events: Vec<_> = recs.iter().filter(|r| r["type"] == "event").collect();
    assert_eq!(events.len(), 1);
    assert!((f(&events[0]["time"]) - 1.0).abs() < 1e-9);
    let summary = recs.last().unwrap();
    assert_eq!(summary["type"], "summary");
    assert!(f(&summary["drift"]["energy"]) <= 1e-9);
    // The sample at the collision instant carries the outgoing velocity.
    let at_one = recs.iter().find(|r| r["type"] == "sample" && (f(&r["t"]) - 1.0).abs() < 1e-12).unwrap();
    assert!(f(&at_one["v"][0]) < 0.0);
}

#[test]
fn simulation_is_deterministic() {
    let args = ["simulate", "--particle", "ellipse:2,1", "--seed", "17", "--time", "5"];
    let (a, b) = (cscat(&args), cscat(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn simulate_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("samples.csv");
    let events = dir.path().join("events.csv");
    let status = cscat(&[
        "simulate", "--particle", "ellipse:2,1", "--seed", "3", "--format", "csv",
        "--out", out.to_str().unwrap(), "--events", events.to_str().unwrap(),
    ]);
    assert!(status.status.success());
    let samples = std::fs::read_to_string(&out).unwrap();
    assert!(samples.starts_with("t,x_1,x_2,theta"));
    assert_eq!(samples.lines().count(), 102);
    assert!(std::fs::read_to_string(&events).unwrap().starts_with("index,time"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "beta = [0.0, 0.0, 0.0]\n[particle]\nkind = \"disk\"\nradius = 2.0\n").unwrap();
    let r = json(&["contact", "--config", cfg.to_str().unwrap()]);
    assert!((f(&r["frame"]["d"]) - 4.0).abs() < 1e-14);
    let r = json(&["contact", "--config", cfg.to_str().unwrap(), "--particle", "disk:0.5"]);
    assert!((f(&r["frame"]["d"]) - 1.0).abs() < 1e-14);
    assert_eq!(r["config"]["particle"]["radius"], 0.5);
}

#[test]
fn particle_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("ellipse.toml");
    std::fs::write(&p, "kind = \"ellipse\"\na = 2.0\nb = 1.0\ndensity = 2.0\n").unwrap();
    let r = json(&["contact", "--particle", p.to_str().unwrap()]);
    assert!((f(&r["frame"]["d"]) - 4.0).abs() < 1e-12);
}

#[test]
fn disk_orbit_stays_below_full_coverage() {
    let out = cscat(&["orbit", "--particle", "disk:1", "--samples", "2000", "--check"]);
    assert_eq!(out.status.code(), Some(4));
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(f(&r["coverage"]) < 1.0);
}

#[test]
fn ellipse_invariants_have_dimension_six() {
    let r = json(&["invariants", "--particle", "ellipse:2,1", "--check"]);
    assert_eq!(r["dimension"], 6);
    assert_eq!(r["null_vectors"].as_array().unwrap().len(), 6);
}

#[test]
fn witness_outcomes() {
    let r = json(&["witness", "--particle", "disk:1"]);
    assert_eq!(r["outcome"], "none found");
    let r = json(&["witness", "--particle", "ellipse:2,1", "--check"]);
    assert_eq!(r["outcome"], "found");
    assert!(f(&r["witness"]["gamma_dot_v"]) < -1e-6);
    assert!(f(&r["witness"]["separation_after_flight"]) < 0.0);
}

#[test]
fn exit_codes() {
    assert_eq!(cscat(&["contact", "--particle", "ellipse:-2,1"]).status.code(), Some(2));
    assert_eq!(cscat(&["contact"]).status.code(), Some(2));
    assert_eq!(cscat(&["contact", "--particle", "disk:1", "--beta", "1,2"]).status.code(), Some(2));
    assert_eq!(cscat(&["contact", "--particle", "disk:1", "--tol", "0"]).status.code(), Some(2));
    assert_eq!(cscat(&["contact", "--bogus"]).status.code(), Some(2));
    assert_eq!(cscat(&["invariants", "--particle", "ellipse:2,1", "--degree", "8", "--modes", "6"]).status.code(), Some(2));
    assert_eq!(cscat(&["orbit", "--particle", "ellipse:2,1", "--velocity=1,0,1,0,0,0"]).status.code(), Some(2));
}
