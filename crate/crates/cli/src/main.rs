//! `weaktrace`: scenario-driven front end over the interferometer simulator.
//!
//! Five commands, one scenario file each: `weak-values`, `abl`, `spectrum`,
//! `kerr`, `leakage`. Exit codes: 0 ok, 2 validation error, 3 undefined
//! quantity (orthogonal selection, post-selection underflow), 4 I/O error.

mod commands;
mod error;
mod output;
mod scenario;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::CliError;
use crate::scenario::Overrides;

#[derive(Parser)]
#[command(name = "weaktrace", version, about = "Pre/post-selected photon simulator for nested interferometers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Weak values of arm-set projectors, written as CSV + JSON
    WeakValues(RunArgs),
    /// ABL outcome probabilities for projective partitions
    Abl(RunArgs),
    /// Quad-cell time series, its power spectrum, and a peak summary
    Spectrum(RunArgs),
    /// Kerr probe readout and the weak-value prediction
    Kerr(RunArgs),
    /// Marker trace sweep with fitted scaling exponents
    Leakage(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (TOML)
    #[arg(long)]
    scenario: PathBuf,
    /// Circuit DSL file; overrides the scenario's `circuit`
    #[arg(long)]
    circuit: Option<PathBuf>,
    /// Output directory; overrides the scenario's `out`
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed recorded in output headers; overrides the scenario's `seed`
    #[arg(long)]
    seed: Option<u64>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::WeakValues(a) => dispatch(a, commands::weak_values),
        Command::Abl(a) => dispatch(a, commands::abl),
        Command::Spectrum(a) => dispatch(a, commands::spectrum),
        Command::Kerr(a) => dispatch(a, commands::kerr),
        Command::Leakage(a) => dispatch(a, commands::leakage),
    }
}

fn dispatch(
    args: &RunArgs,
    runner: impl FnOnce(&scenario::RunContext) -> Result<(), CliError>,
) -> Result<(), CliError> {
    let ctx = scenario::load(
        &args.scenario,
        Overrides { circuit: args.circuit.clone(), out: args.out.clone(), seed: args.seed },
    )?;
    runner(&ctx)
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
