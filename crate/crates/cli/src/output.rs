//! Writes `summary.json`, `trials.csv` and optional function dumps.

use std::fs;
use std::path::Path;

use serde_json::{json, Value};

use crate::config::{ExperimentConfig, ExperimentKind, Violation};
use crate::error::CliError;
use crate::experiments::{Outcome, Table};

pub fn summary(kind: ExperimentKind, config: &ExperimentConfig, warnings: &[Violation], outcome: &Outcome, seconds: f64) -> Value {
    json!({
        "kind": kind.name(),
        "passed": outcome.passed(),
        "config": config,
        "warnings": warnings,
        "checks": outcome.checks,
        "metrics": outcome.metrics,
        "trials": outcome.table.rows.len(),
        "runtime_seconds": seconds,
    })
}

pub fn write_table(table: &Table) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.into_inner().map_err(|e| CliError::Io("trials.csv".into(), e.into_error()))
}

pub fn write_all(dir: &Path, summary: &Value, outcome: &Outcome) -> Result<(), CliError> {
    let io = |what: &Path| {
        let name = what.display().to_string();
        move |e| CliError::Io(name, e)
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let put = |name: &str, bytes: &[u8]| {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(io(&path))
    };
    put("summary.json", serde_json::to_string_pretty(summary)?.as_bytes())?;
    put("trials.csv", &write_table(&outcome.table)?)?;
    for (name, bytes) in &outcome.dumps {
        put(name, bytes)?;
    }
    Ok(())
}
