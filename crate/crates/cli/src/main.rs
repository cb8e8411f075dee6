use std::process::ExitCode;

use clap::Parser;

use lie_sampling_cli::{run, Args};

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok((passed, outcome)) => {
            for c in outcome.checks.iter().filter(|c| !c.passed) {
                eprintln!("failed: {} = {} (want {} {})", c.name, c.value, c.relation, c.bound);
            }
            println!("{}: {} ({} checks)", args.kind, if passed { "pass" } else { "fail" }, outcome.checks.len());
            ExitCode::from(if passed { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
