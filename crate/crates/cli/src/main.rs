#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use clap::{Parser, Subcommand};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "plm",
    version,
    about = "Partially linear models with null recurrent covariates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a dataset from the random-walk design.
    Simulate(commands::simulate::Args),
    /// Fit the truncated semi-parametric least-squares estimator to a CSV file.
    Estimate(commands::estimate::Args),
    /// Run Monte Carlo cells and write the summary table.
    Mc(commands::mc::Args),
    /// Dickey–Fuller test with a simulated null distribution.
    Unitroot(commands::unitroot::Args),
    /// Leave-one-out cross-validation over a bandwidth grid.
    Bandwidth(commands::bandwidth::Args),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => commands::simulate::run(args),
        Command::Estimate(args) => commands::estimate::run(args),
        Command::Mc(args) => commands::mc::run(args),
        Command::Unitroot(args) => commands::unitroot::run(args),
        Command::Bandwidth(args) => commands::bandwidth::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
