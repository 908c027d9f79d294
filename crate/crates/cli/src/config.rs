//! Experiment configuration: schema, defaults and validation.

use std::fmt;
use std::path::PathBuf;

use cbd_core::domination::{OscillationVariable, DEFAULT_THETA};
use cbd_core::grid::Grid;
use cbd_core::kernels::{KernelSpec, OmegaSpec};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Domination,
    Th1,
    John,
    Weights,
    Bochner,
    Norms,
    Rep1,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Domination => "domination",
            Kind::Th1 => "th1",
            Kind::John => "john",
            Kind::Weights => "weights",
            Kind::Bochner => "bochner",
            Kind::Norms => "norms",
            Kind::Rep1 => "rep1",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_d")]
    pub d: usize,
    /// Cells per side.
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_side")]
    pub side: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { d: default_d(), n: default_n(), side: default_side() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OmegaConfig {
    Sign {},
    /// Angular samples `[re, im]`, mean removed.
    Samples { values: Vec<[f64; 2]> },
    /// CSV `angle,re,im`.
    File { path: PathBuf },
    ThreeBump {},
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    #[serde(default)]
    pub d: Option<usize>,
    /// `sign` for `d = 1`, `three_bump` for `d = 2` when absent.
    #[serde(default)]
    pub omega: Option<OmegaConfig>,
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(default = "default_mu")]
    pub mu: i32,
    #[serde(default = "default_nu")]
    pub nu: i32,
    /// Angular resolution.
    #[serde(default, rename = "M")]
    pub m: Option<usize>,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self { d: None, omega: None, q: default_q(), mu: default_mu(), nu: default_nu(), m: None }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_check: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p2: Option<f64>,
    /// Body exponent for `john`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    /// Mixed-characteristic exponent for `weights`, norm exponent for `norms`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directions: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oscillation: Option<OscillationVariable>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default)]
    pub params: Params,
    /// Vector dimension `n` of the test functions.
    #[serde(default = "default_components")]
    pub components: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

fn default_d() -> usize {
    1
}
fn default_n() -> usize {
    64
}
fn default_side() -> f64 {
    1.0
}
fn default_q() -> f64 {
    2.0
}
fn default_mu() -> i32 {
    -7
}
fn default_nu() -> i32 {
    1
}
fn default_components() -> usize {
    1
}
fn default_trials() -> usize {
    10
}
fn default_output() -> PathBuf {
    PathBuf::from("cbd-out")
}

/// A validated configuration with every kind-specific default filled in.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub config: ExperimentConfig,
    pub grid: Grid,
    pub spec: KernelSpec,
}

pub fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
    serde_json::from_str(text).map_err(|e| bad(format!("schema violation: {e}")))
}

pub fn parse_value(v: Value) -> Result<ExperimentConfig, ConfigError> {
    serde_json::from_value(v).map_err(|e| bad(format!("schema violation: {e}")))
}

/// Set a dotted key such as `params.theta` inside a raw config.
pub fn set_path(root: &mut Value, path: &str, value: Value) -> Result<(), ConfigError> {
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(bad(format!("bad axis `{path}`")));
    }
    let mut node = root;
    for k in &keys[..keys.len() - 1] {
        let obj = node.as_object_mut().ok_or_else(|| bad(format!("axis `{path}` does not name an object field")))?;
        node = obj.entry(k.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    let obj = node.as_object_mut().ok_or_else(|| bad(format!("axis `{path}` does not name an object field")))?;
    obj.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

fn check_exponent(name: &str, v: f64, min: f64, strict: bool) -> Result<(), ConfigError> {
    let ok = if strict { v > min } else { v >= min };
    if !ok || !v.is_finite() {
        return Err(bad(format!("{name} = {v} out of range")));
    }
    Ok(())
}

fn omega_from(cfg: &KernelConfig, d: usize) -> Result<OmegaSpec, ConfigError> {
    let q = cfg.q;
    let res = match cfg.omega.as_ref().expect("omega resolved") {
        OmegaConfig::Sign {} => {
            if d != 1 {
                return Err(bad("omega kind `sign` needs d = 1"));
            }
            Ok(OmegaSpec::sign())
        }
        OmegaConfig::ThreeBump {} => OmegaSpec::three_bump(d, cfg.m.unwrap_or(if d == 1 { 2 } else { 64 }), q),
        OmegaConfig::Samples { values } => {
            if let Some(m) = cfg.m {
                if m != values.len() {
                    return Err(bad(format!("M = {m} but {} samples given", values.len())));
                }
            }
            OmegaSpec::new(d, values.iter().map(|v| Complex64::new(v[0], v[1])).collect(), q)
        }
        OmegaConfig::File { path } => {
            let text = std::fs::read_to_string(path).map_err(|e| bad(format!("omega file {}: {e}", path.display())))?;
            OmegaSpec::from_csv(d, &text, q)
        }
    };
    res.map_err(|e| bad(format!("omega: {e}")))
}

/// Check ranges, build the grid and kernel, and fill kind defaults.
pub fn resolve(mut config: ExperimentConfig) -> Result<Resolved, ConfigError> {
    let g = &config.grid;
    if g.d != 1 && g.d != 2 {
        return Err(bad(format!("grid.d = {} must be 1 or 2", g.d)));
    }
    let grid = Grid::unit_origin(g.d, g.side, g.n).map_err(|e| bad(format!("grid: {e}")))?;
    if g.n < 4 || !g.n.is_power_of_two() {
        return Err(bad(format!("grid.n = {} must be a power of two >= 4", g.n)));
    }
    if let Some(d) = config.kernel.d {
        if d != g.d {
            return Err(bad(format!("kernel.d = {d} differs from grid.d = {}", g.d)));
        }
    }
    config.kernel.d = Some(g.d);
    config.kernel.omega.get_or_insert(if g.d == 1 { OmegaConfig::Sign {} } else { OmegaConfig::ThreeBump {} });
    if config.kernel.mu >= config.kernel.nu {
        return Err(bad("kernel.mu must be below kernel.nu"));
    }
    let omega = omega_from(&config.kernel, g.d)?;
    if config.kernel.m.is_none() {
        config.kernel.m = Some(omega.m());
    }
    let spec = KernelSpec::new(omega, config.kernel.mu, config.kernel.nu);
    if config.trials == 0 {
        return Err(bad("trials must be positive"));
    }
    if !(1..=3).contains(&config.components) {
        return Err(bad("components must be 1, 2 or 3"));
    }

    let p = &mut config.params;
    match config.kind {
        Kind::Domination | Kind::Rep1 => {
            p.theta.get_or_insert(DEFAULT_THETA);
            p.theta_check.get_or_insert(1.0);
            p.p1.get_or_insert(2.0);
            p.p2.get_or_insert(2.0);
            p.directions.get_or_insert(cbd_core::johnell::DEFAULT_NET);
            if config.kind == Kind::Domination && (p.gamma.is_some() || p.beta.is_some()) {
                p.gamma.get_or_insert(1.0);
                p.beta.get_or_insert(1.0);
                p.oscillation.get_or_insert(OscillationVariable::Y);
            }
        }
        Kind::Th1 => {
            p.p1.get_or_insert(2.0);
            p.p2.get_or_insert(2.0);
            p.directions.get_or_insert(cbd_core::johnell::DEFAULT_NET);
        }
        Kind::John => {
            p.p.get_or_insert(2.0);
            p.directions.get_or_insert(cbd_core::johnell::DEFAULT_NET);
        }
        Kind::Weights => {
            p.t.get_or_insert(2.0);
            p.alphas.get_or_insert_with(|| vec![0.0, 0.2, 0.4, 0.6, 0.8]);
        }
        Kind::Bochner => {
            p.delta.get_or_insert((g.d as f64 - 1.0) / 2.0);
            p.s.get_or_insert(1.0);
        }
        Kind::Norms => {
            p.q.get_or_insert(if config.kernel.q.is_finite() { config.kernel.q } else { 2.0 });
        }
    }
    for (name, v, min, strict) in [
        ("theta", p.theta, 0.0, true),
        ("theta_check", p.theta_check, 0.0, true),
        ("p1", p.p1, 1.0, false),
        ("p2", p.p2, 1.0, false),
        ("p", p.p, 1.0, false),
        ("t", p.t, 1.0, true),
        ("q", p.q, 1.0, true),
        ("gamma", p.gamma, 1.0, false),
        ("beta", p.beta, 1.0, false),
        ("u", p.u, 0.0, true),
        ("v", p.v, 0.0, true),
        ("delta", p.delta, 0.0, false),
        ("s", p.s, 1.0, false),
    ] {
        if let Some(v) = v {
            check_exponent(name, v, min, strict)?;
        }
    }
    if p.u.is_some() != p.v.is_some() {
        return Err(bad("u and v come together"));
    }
    if matches!(p.directions, Some(0)) {
        return Err(bad("directions must be positive"));
    }
    if let Some(a) = &p.alphas {
        let d = config.grid.d as f64;
        if a.is_empty() || a.iter().any(|x| !x.is_finite() || x.abs() >= d) {
            return Err(bad(format!("alphas must be a nonempty list in (-{d}, {d})")));
        }
    }
    Ok(Resolved { config, grid, spec })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_path_creates_nested_objects() {
        let mut v = serde_json::json!({"kind": "domination"});
        set_path(&mut v, "params.theta", serde_json::json!(3)).unwrap();
        assert_eq!(v["params"]["theta"], 3);
        assert!(set_path(&mut v, "kind.x", serde_json::json!(1)).is_err());
        assert!(set_path(&mut v, "params..t", serde_json::json!(1)).is_err());
    }

    #[test]
    fn defaults_fill_per_kind() {
        let r = resolve(parse(r#"{"kind": "weights"}"#).unwrap()).unwrap();
        assert_eq!(r.config.params.t, Some(2.0));
        assert_eq!(r.config.params.alphas.as_ref().map(Vec::len), Some(5));
        assert_eq!(r.config.params.theta, None);
        let r = resolve(parse(r#"{"kind": "domination"}"#).unwrap()).unwrap();
        assert_eq!(r.config.params.theta, Some(DEFAULT_THETA));
        assert_eq!(r.config.kernel.omega, Some(OmegaConfig::Sign {}));
    }

    #[test]
    fn ranges_are_checked() {
        for text in [
            r#"{"kind": "domination", "kernel": {"mu": 2, "nu": 1}}"#,
            r#"{"kind": "domination", "grid": {"d": 3}}"#,
            r#"{"kind": "domination", "grid": {"d": 2}, "kernel": {"omega": {"kind": "sign"}}}"#,
            r#"{"kind": "th1", "params": {"p1": 0.5}}"#,
            r#"{"kind": "weights", "params": {"u": 2}}"#,
            r#"{"kind": "weights", "params": {"alphas": []}}"#,
            r#"{"kind": "john", "components": 4}"#,
            r#"{"kind": "rep1", "trials": 0}"#,
            r#"{"kind": "norms", "kernel": {"omega": {"kind": "samples", "values": [[1, 0], [-1, 0]]}, "M": 3}}"#,
        ] {
            assert!(resolve(parse(text).unwrap()).is_err(), "{text}");
        }
    }
}
