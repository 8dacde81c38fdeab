//! `twinforge` command-line driver.

mod bench;
mod report;
mod run;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Exit status plus a message for stderr.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn no_data(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }

    pub fn pipeline(message: impl Into<String>) -> Self {
        Self {
            code: 4,
            message: message.into(),
        }
    }
}

pub type CmdResult = Result<(), Failure>;

#[derive(Debug, Parser)]
#[command(
    name = "twinforge",
    version,
    about = "Digital-twin runtime with zero-configuration analytics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a telemetry trace and its ground truth.
    Simulate(simulate::Args),
    /// Ingest a trace and run the replica sweep on one machine.
    Run(run::Args),
    /// Print the ranking table of a report.json.
    Report { report: PathBuf },
    /// Measure replay throughput through readiness and cluster assignment.
    Bench(bench::Args),
}

/// Worker cap from `TWINFORGE_THREADS`; unset or empty means all cores.
pub fn worker_threads() -> Result<Option<usize>, Failure> {
    match std::env::var("TWINFORGE_THREADS") {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| {
                Failure::usage(format!(
                    "TWINFORGE_THREADS must be a positive integer, got {v:?}"
                ))
            }),
        _ => Ok(None),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(args) => simulate::execute(args),
        Command::Run(args) => run::execute(args),
        Command::Report { report } => report::execute(&report),
        Command::Bench(args) => bench::execute(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
