//! `smc`: matrix completion on CSV files and seeded simulation sweeps.
//!
//! Exit codes: 0 success, 2 invalid input, 3 solver failure.

mod complete;
mod logging;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use smc_core::Error;

#[derive(Parser)]
#[command(name = "smc", version, about = "Low-rank and spatial matrix completion")]
struct Cli {
    /// Only report errors.
    #[arg(long, global = true)]
    quiet: bool,
    /// Emit log records as JSON lines on stderr.
    #[arg(long, global = true)]
    json_logs: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Complete a matrix with missing entries (`NA` cells).
    Complete(complete::CompleteArgs),
    /// Predict full profiles at new locations from a saved spatial fit.
    Predict(complete::PredictArgs),
    /// Run a seeded sweep over MCAR levels and write reports.
    Simulate(simulate::SimulateArgs),
    /// Write one simulated dataset as CSV files.
    Generate(simulate::GenerateArgs),
}

/// Where a simulation config comes from.
#[derive(Args, Clone)]
#[group(required = true, multiple = false)]
pub struct ConfigSource {
    /// Scenario config file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Shipped preset name(s), comma-separated, e.g. `toy-C` or `toy-A,toy-C`.
    #[arg(long)]
    preset: Option<String>,
}

pub fn exit_code(e: &Error) -> u8 {
    if e.is_input_error() {
        2
    } else {
        3
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    logging::init(cli.quiet, cli.json_logs);
    let result = match cli.command {
        Command::Complete(a) => complete::run(a),
        Command::Predict(a) => complete::predict(a),
        Command::Simulate(a) => simulate::run(a, cli.quiet),
        Command::Generate(a) => simulate::generate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
