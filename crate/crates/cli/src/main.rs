//! `qbhatt`: variance lower bounds and optimal-estimator verification for
//! one-parameter bosonic models on truncated Fock spaces.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure.

mod commands;
mod modelfile;
mod output;
mod spec;

use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qbhatt::Error;
use serde::Serialize;

use output::{CsvRow, Report};

#[derive(Parser)]
#[command(name = "qbhatt", version, about = "Quantum variance lower bounds on truncated Fock spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep variance lower bounds over a parameter grid.
    Bounds(commands::BoundsArgs),
    /// Verify an estimator: bias, variance, bound attainment.
    Verify(commands::VerifyArgs),
    /// Dump an information matrix, with closed-form deltas when gaussian.
    Jmatrix(commands::JmatrixArgs),
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Parse(_)
        | Error::BadGFunction(..)
        | Error::UnsupportedOrder { .. }
        | Error::InvalidDimension { .. }
        | Error::FlavorMismatch(_) => 2,
        _ => 3,
    }
}

fn emit<R: Serialize + CsvRow>(
    report: &Report<R>,
    out: Option<&Path>,
    format: &str,
) -> Result<(), Error> {
    let text = match format {
        "json" => output::to_json(report)?,
        "csv" => output::to_csv(report)?,
        other => {
            return Err(Error::Parse(format!(
                "unknown format `{other}` (expected json or csv)"
            )));
        }
    };
    match out {
        Some(path) => {
            std::fs::write(path, &text).map_err(|e| {
                Error::Parse(format!("cannot write {}: {e}", path.display()))
            })?;
            println!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    for line in &report.summary {
        eprintln!(
            "{}: {} ({})",
            line.invariant,
            if line.pass { "PASS" } else { "FAIL" },
            line.detail
        );
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Bounds(args) => {
            let report = commands::run_bounds(args)?;
            emit(&report, args.common.out.as_deref(), &args.common.format)
        }
        Command::Verify(args) => {
            let report = commands::run_verify(args)?;
            emit(&report, args.common.out.as_deref(), &args.common.format)
        }
        Command::Jmatrix(args) => {
            let report = commands::run_jmatrix(args)?;
            emit(&report, args.common.out.as_deref(), &args.common.format)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
