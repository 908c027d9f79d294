//! Report files: `report.json` plus one CSV table per run, and the merged
//! tables of a sweep. No timestamps are written, so identical configs give
//! byte-identical files.

use std::fs;
use std::path::Path;

use cbd_core::kernels::forms::CUTOFF_ID;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{self, ConfigError, Resolved};
use crate::experiments::{Invariant, Outcome};

pub fn read(path: &Path) -> Result<String, ConfigError> {
    fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))
}

/// SHA-256 of the resolved config without its output path.
pub fn config_hash(r: &Resolved) -> String {
    let mut v = serde_json::to_value(&r.config).expect("config serializes");
    v.as_object_mut().expect("config is an object").remove("output");
    let digest = Sha256::digest(v.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn versions() -> Value {
    json!({ "cbd-core": cbd_core::VERSION, "cbd-cli": env!("CARGO_PKG_VERSION") })
}

fn failed(invariants: &[Invariant]) -> Vec<&'static str> {
    invariants.iter().filter(|i| !i.ok).map(|i| i.name).collect()
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> std::io::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.into_inner().map_err(|e| e.into_error())
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

/// Write `report.json` and `<kind>.csv`; returns whether every invariant held.
pub fn write_run(r: &Resolved, outcome: &Outcome) -> std::io::Result<bool> {
    let dir = &r.config.output;
    fs::create_dir_all(dir)?;
    let fails = failed(&outcome.invariants);
    let report = json!({
        "kind": r.config.kind.name(),
        "config": r.config,
        "config_hash": config_hash(r),
        "versions": versions(),
        "cutoff_id": CUTOFF_ID,
        "summary": outcome.summary,
        "invariants": outcome.invariants,
        "failed_invariants": fails,
        "ok": fails.is_empty(),
    });
    fs::write(dir.join(format!("{}.csv", r.config.kind.name())), csv_bytes(&outcome.table.header, &outcome.table.rows)?)?;
    fs::write(dir.join("report.json"), pretty(&report))?;
    Ok(fails.is_empty())
}

pub fn print_invariants(invariants: &[Invariant]) {
    for i in invariants {
        println!("[{}] {}: {}", if i.ok { "ok" } else { "FAILED" }, i.name, i.detail);
    }
}

/// Resolve every sweep point up front so a bad value writes nothing.
pub fn plan_sweep(raw: &Value, axis: &str, values: &[String]) -> Result<Vec<(Value, Resolved)>, ConfigError> {
    if values.is_empty() {
        return Err(ConfigError("empty value list".into()));
    }
    let mut out: Vec<(Value, Resolved)> = Vec::with_capacity(values.len());
    for text in values {
        let value: Value = serde_json::from_str(text).unwrap_or_else(|_| Value::String(text.clone()));
        let mut v = raw.clone();
        config::set_path(&mut v, axis, value.clone())?;
        let resolved = config::resolve(config::parse_value(v)?)?;
        if let Some((_, first)) = out.first() {
            if first.config.kind != resolved.config.kind {
                return Err(ConfigError("a sweep cannot change the experiment kind".into()));
            }
        }
        out.push((value, resolved));
    }
    Ok(out)
}

/// Write `sweep.csv` (axis value and seed prepended) and `sweep.json`.
pub fn write_sweep(dir: &Path, axis: &str, runs: &[(Value, Resolved, Outcome)]) -> std::io::Result<bool> {
    fs::create_dir_all(dir)?;
    let mut header = vec![axis, "run_seed"];
    header.extend(runs[0].2.table.header.iter().copied());
    let mut rows = Vec::new();
    let mut entries = Vec::new();
    let mut ok = true;
    for (value, r, outcome) in runs {
        let label = match value {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        for row in &outcome.table.rows {
            let mut full = vec![label.clone(), r.config.seed.to_string()];
            full.extend(row.iter().cloned());
            rows.push(full);
        }
        let fails = failed(&outcome.invariants);
        ok &= fails.is_empty();
        entries.push(json!({
            "value": value,
            "seed": r.config.seed,
            "config": r.config,
            "config_hash": config_hash(r),
            "summary": outcome.summary,
            "invariants": outcome.invariants,
            "failed_invariants": fails,
        }));
        println!("{axis} = {label}");
        print_invariants(&outcome.invariants);
    }
    let report = json!({
        "kind": runs[0].1.config.kind.name(),
        "axis": axis,
        "versions": versions(),
        "cutoff_id": CUTOFF_ID,
        "runs": entries,
        "ok": ok,
    });
    fs::write(dir.join("sweep.csv"), csv_bytes(&header, &rows)?)?;
    fs::write(dir.join("sweep.json"), pretty(&report))?;
    Ok(ok)
}
