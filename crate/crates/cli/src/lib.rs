//! Command line runner for the sampling experiments.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

use std::path::PathBuf;
use std::time::Instant;

use clap::Parser;

use config::{apply_override, has_errors, validate, ExperimentConfig, ExperimentKind};
use error::CliError;
use experiments::{run_experiment, Outcome};

#[derive(Debug, Parser)]
#[command(name = "liesample", about = "Run a sampling experiment and write its report")]
pub struct Args {
    /// Experiment to run.
    pub kind: ExperimentKind,
    /// JSON configuration file; missing keys take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the seed from the file and from `--override`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// `key=value` with a JSON value; dotted keys reach nested objects.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

/// Resolves the configuration: file, then overrides, then `--seed`.
pub fn resolve(args: &Args) -> Result<ExperimentConfig, CliError> {
    let mut v = ExperimentConfig::load(args.config.as_deref())?;
    for o in &args.overrides {
        apply_override(&mut v, o)?;
    }
    let mut c = ExperimentConfig::from_value(v)?;
    if let Some(s) = args.seed {
        c.seed = s;
    }
    Ok(c)
}

/// Runs and writes the report. `Ok(false)` means a check failed.
pub fn run(args: &Args) -> Result<(bool, Outcome), CliError> {
    let c = resolve(args)?;
    let issues = validate(&c);
    if has_errors(&issues) {
        return Err(CliError::Invalid(issues));
    }
    for w in &issues {
        eprintln!("{w}");
    }
    let start = Instant::now();
    let outcome = run_experiment(args.kind, &c)?;
    let s = output::summary(args.kind, &c, &issues, &outcome, start.elapsed().as_secs_f64());
    output::write_all(&args.out, &s, &outcome)?;
    Ok((outcome.passed(), outcome))
}
