use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;
use wavebound_core::bounds::synth_stream_field;
use wavebound_core::{StreamProfile, StreamSolver, SynthKind, VorticityDistribution};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wavebound"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn constant_dist(dir: &Path, c: f64) -> PathBuf {
    let p = dir.join(format!("const_{c}.json"));
    let d = VorticityDistribution::constant(c);
    std::fs::write(&p, d.to_json()).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn curve_row_at_one_is_critical() {
    let dir = TempDir::new().unwrap();
    let dist = constant_dist(dir.path(), 0.0);
    let out = dir.path().join("curve.csv");
    let o = run(&["curve", "--dist", s(&dist), "--s-min", "0.5", "--s-max", "2", "--grid", "16", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    let row = rows.iter().find(|r| r[0].parse::<f64>().unwrap() == 1.0).unwrap();
    assert!((row[2].parse::<f64>().unwrap() - 1.0).abs() <= 1e-10);
    assert_eq!(&row[3], "positive");
    let constants: Value = serde_json::from_str(&std::fs::read_to_string(out.with_extension("json")).unwrap()).unwrap();
    assert_eq!(constants["h0"], "inf");
    assert!((constants["r_c"].as_f64().unwrap() - 1.0).abs() <= 1e-10);
}

#[test]
fn family_minus_depth() {
    let dir = TempDir::new().unwrap();
    let dist = constant_dist(dir.path(), -2.0);
    let o = run(&["family", "--dist", s(&dist), "--side", "minus", "--s", "1"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["depth"].as_f64().unwrap() - 1.6180339887).abs() <= 1e-9);
}

#[test]
fn check_synthetic_stream_field() {
    let dir = TempDir::new().unwrap();
    let dist = constant_dist(dir.path(), 0.0);
    let solver = StreamSolver::new(VorticityDistribution::constant(0.0));
    let f = synth_stream_field(&solver, SynthKind::Stream, 0.8, 4.0, 9, 17).unwrap();
    let field = dir.path().join("field.json");
    std::fs::write(&field, f.to_json().unwrap()).unwrap();
    let o = run(&["check", "--dist", s(&dist), "--field", s(&field)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["stream"], true);
    assert_eq!(v["theorems"].as_array().unwrap().len(), 5);
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let dir = TempDir::new().unwrap();
    let dist = constant_dist(dir.path(), -2.0);
    for args in [
        vec!["curve", "--negative", "--s-min", "0.1", "--s-max", "3"],
        vec!["extend"],
        vec!["lemmas"],
    ] {
        let mut outs = Vec::new();
        for n in ["1", "4", "4"] {
            let mut a = args.clone();
            a.extend(["--dist", s(&dist), "--parallel", n, "--grid", "33"]);
            let o = run(&a);
            assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
            outs.push((o.stdout, o.stderr));
        }
        assert!(outs.windows(2).all(|w| w[0] == w[1]), "{args:?}");
    }
}

#[test]
fn stream_profile_round_trips() {
    let dir = TempDir::new().unwrap();
    let dist = constant_dist(dir.path(), 2.0);
    let out = dir.path().join("profile.json");
    let o = run(&["stream", "--dist", s(&dist), "--s", "3", "--grid", "17", "--out", s(&out)]);
    assert!(o.status.success());
    let p: StreamProfile = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let solver = StreamSolver::new(VorticityDistribution::constant(2.0));
    let h = solver.depth(3.0).unwrap();
    let grid: Vec<f64> = (0..17).map(|i| if i == 16 { h } else { h * i as f64 / 16.0 }).collect();
    assert_eq!(p, solver.profile_implicit(3.0, &grid).unwrap());
}

#[test]
fn malformed_inputs_name_the_key() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"segments":[{"from":0,"to":1,"coef":[1]}]}"#).unwrap();
    let o = run(&["classify", "--dist", s(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("coef"));

    let dist = constant_dist(dir.path(), 0.0);
    let field = dir.path().join("field.json");
    std::fs::write(&field, r#"{"x":[0],"eta":[1],"sigma":[0,0.5,1],"psi":[[0,0.5,1]],"r":1,"bogus":2}"#).unwrap();
    let o = run(&["check", "--dist", s(&dist), "--field", s(&field)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));

    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"grid": 16, "tolerance": 1}"#).unwrap();
    let o = run(&["classify", "--dist", s(&dist), "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("tolerance"));

    let o = run(&["curve", "--dist", s(&dist), "--grid", "4"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn hypothesis_failures_exit_two() {
    let dir = TempDir::new().unwrap();
    let dist = constant_dist(dir.path(), 0.0);
    assert_eq!(run(&["lemmas", "--dist", s(&dist)]).status.code(), Some(2));
    assert_eq!(run(&["family", "--dist", s(&dist), "--side", "plus", "--s", "1"]).status.code(), Some(2));
    assert_eq!(run(&["conjugate", "--dist", s(&dist), "--r", "0.5"]).status.code(), Some(2));
}

#[test]
fn config_file_supplies_values() {
    let dir = TempDir::new().unwrap();
    let dist = constant_dist(dir.path(), -2.0);
    let cfg = dir.path().join("cfg.json");
    let text = serde_json::json!({"dist": dist, "side": "minus", "s": 1.0, "grid": 9});
    std::fs::write(&cfg, text.to_string()).unwrap();
    let o = run(&["family", "--config", s(&cfg)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["grid"].as_array().unwrap().len(), 9);
    let o = run(&["family", "--config", s(&cfg), "--s", "3"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["depth"].as_f64().unwrap() - (3.0 + 13f64.sqrt()) / 2.0).abs() <= 1e-9);
}
