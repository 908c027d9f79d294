use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cbd(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cbd")).args(args).current_dir(dir).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(|r| r.unwrap()).collect()
}

#[test]
fn rep1_defaults_close_the_ledgers() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "rep1.json", r#"{"kind": "rep1", "output": "out"}"#);
    let out = cbd(&["run", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = report(&tmp.path().join("out"));
    assert!(rep["summary"]["max_rep1_gap"].as_f64().unwrap() < 1e-10);
    assert!(rep["summary"]["max_ledger_gap"].as_f64().unwrap() < 1e-10);
    assert_eq!(rep["failed_invariants"], serde_json::json!([]));
}

#[test]
fn domination_table_has_one_row_per_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "dom.json",
        r#"{"kind": "domination", "grid": {"d": 1, "n": 64}, "components": 2,
            "kernel": {"omega": {"kind": "sign"}}, "trials": 20, "output": "out"}"#,
    );
    let out = cbd(&["run", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let rows = csv_rows(&tmp.path().join("out/domination.csv"));
    assert_eq!(rows.len(), 20);
    let rep = report(&tmp.path().join("out"));
    assert_eq!(rep["summary"]["trials"].as_array().unwrap().len(), 20);
    assert!(rep["summary"]["trials"][0]["levels"][0]["packing_ratio"].is_number());
}

#[test]
fn malformed_configs_exit_2_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    for (i, text) in [
        r#"{"kind": "domination", "bogus": 1, "output": "out"}"#,
        r#"{"kind": "domination", "params": {"thta": 3}, "output": "out"}"#,
        r#"{"kind": "domination", "kernel": {"omega": {"kind": "sign", "x": 1}}, "output": "out"}"#,
        r#"{"kind": "teleport", "output": "out"}"#,
        r#"{"kind": "weights", "params": {"t": 1.0}, "output": "out"}"#,
        r#"{"kind": "domination", "grid": {"n": 48}, "output": "out"}"#,
        r#"{"kind": "domination""#,
    ]
    .iter()
    .enumerate()
    {
        let cfg = write_config(tmp.path(), &format!("bad{i}.json"), text);
        let out = cbd(&["run", &cfg], tmp.path());
        assert_eq!(out.status.code(), Some(2), "config {text}");
        assert!(!tmp.path().join("out").exists());
    }
}

#[test]
fn identical_configs_give_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "dom.json", r#"{"kind": "domination", "trials": 6, "seed": 17}"#);
    for out in ["a", "b"] {
        let status = cbd(&["run", &cfg, "--out", out], tmp.path()).status;
        assert_eq!(status.code(), Some(0));
    }
    let a = fs::read(tmp.path().join("a/domination.csv")).unwrap();
    let b = fs::read(tmp.path().join("b/domination.csv")).unwrap();
    assert_eq!(a, b);
    let (ra, rb) = (report(&tmp.path().join("a")), report(&tmp.path().join("b")));
    assert_eq!(ra["config_hash"], rb["config_hash"]);
    assert_eq!(ra["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(ra["cutoff_id"], "smoothstep-exp/psi-half-one");
    assert!(ra["versions"]["cbd-core"].is_string());
    assert_eq!(ra["config"]["params"]["theta"], 8.0);
}

#[test]
fn theta_sweep_packing_is_non_increasing() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "dom.json", r#"{"kind": "domination", "trials": 5, "components": 2}"#);
    // low Θ leaves no sparse room (η = 0), which the run reports as an invariant failure
    let out = cbd(&["sweep", &cfg, "--axis", "params.theta", "--values", "1,2,3", "--out", "sw"], tmp.path());
    assert!(matches!(out.status.code(), Some(0) | Some(1)));
    let rows = csv_rows(&tmp.path().join("sw/sweep.csv"));
    assert_eq!(rows.len(), 15);
    let header = csv::Reader::from_path(tmp.path().join("sw/sweep.csv")).unwrap().headers().unwrap().clone();
    let col = header.iter().position(|h| h == "root_packing").unwrap();
    for trial in 0..5 {
        let packing: Vec<f64> = (0..3).map(|k| rows[5 * k + trial][col].parse().unwrap()).collect();
        assert!(packing.windows(2).all(|w| w[1] <= w[0]), "trial {trial}: {packing:?}");
    }
    let summary: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("sw/sweep.json")).unwrap()).unwrap();
    assert_eq!(summary["runs"].as_array().unwrap().len(), 3);
    assert_eq!(summary["runs"][0]["seed"], 0);
}

#[test]
fn sweep_over_t_gives_an_exponent_curve() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "w.json", r#"{"kind": "weights", "grid": {"n": 32}, "components": 2}"#);
    let out = cbd(&["sweep", &cfg, "--axis", "params.t", "--values", "1.5,2,3", "--out", "sw"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let rows = csv_rows(&tmp.path().join("sw/sweep.csv"));
    assert_eq!(rows.len(), 15);
}

#[test]
fn empty_sweep_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "dom.json", r#"{"kind": "domination"}"#);
    let out = cbd(&["sweep", &cfg, "--axis", "params.theta", "--out", "sw"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!tmp.path().join("sw").exists());
}

#[test]
fn validate_prints_the_resolved_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "b.json", r#"{"kind": "bochner", "grid": {"d": 2, "n": 8}}"#);
    let out = cbd(&["validate", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["params"]["delta"], 0.5);
    assert_eq!(v["kernel"]["omega"]["kind"], "three_bump");
}

#[test]
fn remaining_kinds_run_clean() {
    let tmp = tempfile::tempdir().unwrap();
    for (name, text) in [
        ("th1", r#"{"kind": "th1", "grid": {"n": 16}, "trials": 4, "components": 2}"#),
        ("john", r#"{"kind": "john", "grid": {"n": 16}, "trials": 4, "components": 2, "params": {"p": 3}}"#),
        ("bochner", r#"{"kind": "bochner", "grid": {"n": 32}, "trials": 2, "params": {"delta": 0, "s": 2}}"#),
        ("norms", r#"{"kind": "norms", "grid": {"d": 2, "n": 16}, "kernel": {"M": 32, "q": 3}}"#),
    ] {
        let cfg = write_config(tmp.path(), &format!("{name}.json"), text);
        let out = cbd(&["run", &cfg, "--out", name], tmp.path());
        assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stdout));
        assert!(tmp.path().join(name).join(format!("{name}.csv")).exists());
    }
}
