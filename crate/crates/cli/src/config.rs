//! Experiment configuration: JSON file, then `key=value` overrides.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    GroupCheck,
    KernelCheck,
    BlFrame,
    BlReconstruct,
    AffineOsc,
    AffineFrame,
    AffineReconstruct,
    GardingCheck,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::GroupCheck,
        ExperimentKind::KernelCheck,
        ExperimentKind::BlFrame,
        ExperimentKind::BlReconstruct,
        ExperimentKind::AffineOsc,
        ExperimentKind::AffineFrame,
        ExperimentKind::AffineReconstruct,
        ExperimentKind::GardingCheck,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::GroupCheck => "group-check",
            ExperimentKind::KernelCheck => "kernel-check",
            ExperimentKind::BlFrame => "bl-frame",
            ExperimentKind::BlReconstruct => "bl-reconstruct",
            ExperimentKind::AffineOsc => "affine-osc",
            ExperimentKind::AffineFrame => "affine-frame",
            ExperimentKind::AffineReconstruct => "affine-reconstruct",
            ExperimentKind::GardingCheck => "garding-check",
        }
    }

    fn is_band_limited(&self) -> bool {
        matches!(self, ExperimentKind::BlFrame | ExperimentKind::BlReconstruct)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown experiment kind {s:?}")))
    }
}

/// Truncation box and resolution of the affine grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub a_min: f64,
    pub a_max: f64,
    pub n_a: usize,
    pub b_min: f64,
    pub b_max: f64,
    pub n_b: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { a_min: 1.0 / 16.0, a_max: 16.0, n_a: 64, b_min: -16.0, b_max: 16.0, n_b: 512 }
    }
}

/// Every numeric knob of every experiment. Keys an experiment does not use
/// are ignored by it but still validated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,

    // band-limited
    pub omega: f64,
    /// Gap levels `δΩ/π` of `bl-frame`.
    pub gap_levels: Vec<f64>,
    /// Gap level of `bl-reconstruct`.
    pub gap: f64,
    pub functions: usize,
    pub sequences: usize,
    pub modes: usize,
    pub sequence_jitter: f64,
    pub half_window: f64,
    pub sup_resolution: usize,

    // affine
    pub grid: GridConfig,
    pub wavelet_order: u32,
    /// Coarsest sampling radius; the studies use `[ε₀, ε₀/2, ε₀/4]`.
    pub eps: f64,
    pub rho: f64,
    pub jitter: f64,
    pub p: f64,
    /// Signals per affine study (oscillation, reconstruction, kernel checks).
    pub signals: usize,
    /// Estimation and held-out suite sizes of `affine-frame`.
    pub suite: usize,
    pub held_out: usize,
    pub signal_atoms: usize,
    pub operators: Vec<String>,
    pub step: f64,
    pub u_resolution: usize,
    pub garding_radius: f64,
    pub group_cases: usize,

    /// Iteration stop; `None` picks 1e-10 (band-limited) or 1e-4 (affine).
    pub tol: Option<f64>,
    /// Iteration cap; `None` picks 30 (band-limited) or 50 (affine).
    pub maxiter: Option<usize>,

    /// Dump reconstructed functions as `function_*.csv`.
    pub dump_functions: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            omega: PI,
            gap_levels: vec![0.25, 0.5, 0.75],
            gap: 0.5,
            functions: 100,
            sequences: 20,
            modes: 16,
            sequence_jitter: 0.5,
            half_window: 80.0,
            sup_resolution: 16,
            grid: GridConfig::default(),
            wavelet_order: 1,
            eps: 1.0,
            rho: 0.8,
            jitter: 0.2,
            p: 2.0,
            signals: 3,
            suite: 50,
            held_out: 20,
            signal_atoms: 4,
            operators: vec!["T1".into(), "T2".into(), "T3".into()],
            step: 1e-3,
            u_resolution: 9,
            garding_radius: 0.5,
            group_cases: 10_000,
            tol: None,
            maxiter: None,
            dump_functions: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_value(v: Value) -> Result<Self, CliError> {
        serde_json::from_value(v).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads a JSON file, or all defaults when `path` is `None`.
    pub fn load(path: Option<&Path>) -> Result<Value, CliError> {
        match path {
            None => Ok(Value::Object(Default::default())),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(p.display().to_string(), e))?;
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
            }
        }
    }

    pub fn tol_for(&self, kind: ExperimentKind) -> f64 {
        self.tol.unwrap_or(if kind.is_band_limited() { 1e-10 } else { 1e-4 })
    }

    pub fn maxiter_for(&self, kind: ExperimentKind) -> usize {
        self.maxiter.unwrap_or(if kind.is_band_limited() { 30 } else { 50 })
    }

    pub fn eps_levels(&self) -> [f64; 3] {
        [self.eps, self.eps / 2.0, self.eps / 4.0]
    }
}

/// Sets `key=value` in a JSON object. Dotted keys reach into nested objects;
/// values parse as JSON, falling back to a bare string.
pub fn apply_override(config: &mut Value, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override {assignment:?} is not key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut slot = config;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(CliError::Config(format!("empty key segment in {key:?}")));
        }
        let obj = slot
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("{key:?}: {part:?} is not inside an object")))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        slot = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("split yields at least one segment")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub severity: Severity,
    pub key: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{tag}: {}: {}", self.key, self.message)
    }
}

/// All range problems in `c`. Errors block a run; warnings are recorded.
pub fn validate(c: &ExperimentConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut err = |key: &str, message: String| out.push(Violation { severity: Severity::Error, key: key.into(), message });
    let pos = |x: f64| x.is_finite() && x > 0.0;

    if !pos(c.omega) {
        err("omega", format!("must be positive, got {}", c.omega));
    }
    if c.gap_levels.is_empty() {
        err("gap_levels", "must not be empty".into());
    }
    for (i, g) in c.gap_levels.iter().enumerate() {
        if !pos(*g) {
            err(&format!("gap_levels[{i}]"), format!("must be positive, got {g}"));
        }
    }
    if !pos(c.gap) {
        err("gap", format!("must be positive, got {}", c.gap));
    }
    for (key, v) in [
        ("functions", c.functions),
        ("sequences", c.sequences),
        ("modes", c.modes),
        ("sup_resolution", c.sup_resolution),
        ("signals", c.signals),
        ("suite", c.suite),
        ("signal_atoms", c.signal_atoms),
        ("group_cases", c.group_cases),
    ] {
        if v == 0 {
            err(key, "must be at least 1".into());
        }
    }
    if !(0.0..1.0).contains(&c.sequence_jitter) {
        err("sequence_jitter", format!("must lie in [0, 1), got {}", c.sequence_jitter));
    }
    if !pos(c.half_window) {
        err("half_window", format!("must be positive, got {}", c.half_window));
    }

    let g = &c.grid;
    if !(pos(g.a_min) && g.a_max > g.a_min && g.a_max.is_finite()) {
        err("grid", format!("need 0 < a_min < a_max, got [{}, {}]", g.a_min, g.a_max));
    }
    if !(g.b_min.is_finite() && g.b_max.is_finite() && g.b_max > g.b_min) {
        err("grid", format!("need b_min < b_max, got [{}, {}]", g.b_min, g.b_max));
    }
    if g.n_a < 2 || g.n_b < 2 {
        err("grid", format!("need at least 2 nodes per axis, got {}x{}", g.n_a, g.n_b));
    }
    if c.wavelet_order == 0 {
        err("wavelet_order", "must be at least 1".into());
    }
    if !pos(c.eps) {
        err("eps", format!("must be positive, got {}", c.eps));
    }
    if !(c.rho > 0.0 && c.rho <= 1.0) {
        err("rho", format!("must lie in (0, 1], got {}", c.rho));
    }
    if !(0.0..1.0).contains(&c.jitter) {
        err("jitter", format!("must lie in [0, 1), got {}", c.jitter));
    }
    if !(c.p >= 1.0 && c.p.is_finite()) {
        err("p", format!("must be finite and >= 1, got {}", c.p));
    }
    if c.operators.is_empty() {
        err("operators", "must not be empty".into());
    }
    for op in &c.operators {
        if !matches!(op.as_str(), "T1" | "T2" | "T3") {
            err("operators", format!("unknown operator {op:?}"));
        }
    }
    if !pos(c.step) {
        err("step", format!("must be positive, got {}", c.step));
    }
    if c.u_resolution < 3 {
        err("u_resolution", format!("must be at least 3, got {}", c.u_resolution));
    }
    if !pos(c.garding_radius) {
        err("garding_radius", format!("must be positive, got {}", c.garding_radius));
    }
    if let Some(t) = c.tol {
        if !pos(t) {
            err("tol", format!("must be positive, got {t}"));
        }
    }
    if c.maxiter == Some(0) {
        err("maxiter", "must be at least 1".into());
    }

    let mut warn = |key: &str, message: String| out.push(Violation { severity: Severity::Warning, key: key.into(), message });
    for (i, g) in c.gap_levels.iter().enumerate() {
        if *g >= 1.0 {
            warn(&format!("gap_levels[{i}]"), format!("δΩ/π = {g} >= 1, beyond the Nyquist rate"));
        }
    }
    if c.gap >= 1.0 {
        warn("gap", format!("δΩ/π = {} >= 1, the frame iteration need not contract", c.gap));
    }
    if c.rho * (1.0 + c.jitter) > 1.0 {
        warn("jitter", format!("rho (1 + jitter) = {} > 1, sample sets may fail to cover", c.rho * (1.0 + c.jitter)));
    }
    out
}

pub fn has_errors(v: &[Violation]) -> bool {
    v.iter().any(|x| x.severity == Severity::Error)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_valid() {
        let c = ExperimentConfig::from_value(serde_json::json!({})).unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert!(validate(&c).is_empty());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::from_value(serde_json::json!({"epsilon": 1.0})).is_err());
        assert!(ExperimentConfig::from_value(serde_json::json!({"grid": {"na": 3}})).is_err());
    }

    #[test]
    fn negative_eps_is_an_error() {
        let c = ExperimentConfig { eps: -0.1, ..Default::default() };
        let v = validate(&c);
        assert!(has_errors(&v));
        assert!(v.iter().any(|x| x.key == "eps"));
    }

    #[test]
    fn wide_gap_is_only_a_warning() {
        let c = ExperimentConfig { gap_levels: vec![0.5, 1.2], ..Default::default() };
        let v = validate(&c);
        assert!(!has_errors(&v));
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].key, "gap_levels[1]");
    }

    #[test]
    fn overrides_parse_json_and_nest() {
        let mut v = serde_json::json!({"seed": 3});
        apply_override(&mut v, "seed=9").unwrap();
        apply_override(&mut v, "grid.n_b=128").unwrap();
        apply_override(&mut v, "operators=[\"T2\"]").unwrap();
        let c = ExperimentConfig::from_value(v).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.grid.n_b, 128);
        assert_eq!(c.operators, vec!["T2".to_string()]);
        assert!(apply_override(&mut serde_json::json!({}), "novalue").is_err());
    }

    #[test]
    fn kinds_round_trip_names() {
        for k in ExperimentKind::ALL {
            assert_eq!(k.name().parse::<ExperimentKind>().unwrap(), k);
            assert_eq!(serde_json::to_value(k).unwrap(), Value::String(k.name().into()));
        }
    }
}
