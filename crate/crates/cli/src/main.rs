//! `esb`: Expected Shortfall backtesting from the command line.
//!
//! Exit codes: 0 success, 2 invalid input or configuration, 3 a test or
//! study failed, 1 anything else.

mod commands;
mod config;
mod error;
mod io;
mod manifest;
mod options;

use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use commands::backtest::BacktestArgs;
use commands::mc::McArgs;
use commands::rank::RankArgs;
use commands::simulate::SimulateArgs;
use error::{CliError, CliResult};

/// Version of the JSON report layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "esb", version, about = "Regression-based Expected Shortfall backtesting")]
struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, env = "ESB_THREADS", default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Backtest ES forecasts stored in a CSV file.
    Backtest(BacktestArgs),
    /// Simulate a return path with VaR/ES forecasts.
    Simulate(SimulateArgs),
    /// Run a Monte Carlo study described by a config file.
    Mc(McArgs),
    /// Rank forecast files by mean FZ0 loss.
    Rank(RankArgs),
}

fn run(cli: Cli) -> CliResult<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .context("cannot start the thread pool")
        .map_err(CliError::other)?;
    match &cli.command {
        Command::Backtest(a) => commands::backtest::run(a),
        Command::Simulate(a) => commands::simulate::run(a),
        Command::Mc(a) => commands::mc::run(a),
        Command::Rank(a) => commands::rank::run(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
