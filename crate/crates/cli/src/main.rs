//! `macrotest`: priors, posteriors, macroscopicities and likelihood maps
//! from interferometer count data.

mod commands;
mod config;
mod io;
mod units;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use crate::commands::Options;
use crate::units::{parse_range, Dim};

/// Problem with the configuration or the data files (exit code 2).
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct InputError(pub String);

#[derive(Debug, Parser)]
#[command(name = "macrotest", version, about = "Bayesian tests of macrorealist modifications")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (TOML); repeat for map2d.
    #[arg(long, global = true)]
    config: Vec<PathBuf>,

    /// Count data (CSV); several files are concatenated, map2d pairs them with configs.
    #[arg(long, global = true, num_args = 1..)]
    data: Vec<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Tau grid MIN:MAX:N, bounds in seconds or with units.
    #[arg(long, global = true)]
    grid_tau: Option<String>,

    /// Critical-length grid MIN:MAX:N, bounds in metres or with units.
    #[arg(long, global = true)]
    grid_length: Option<String>,

    /// Seed for simulate, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for grid evaluations.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Quantile level defining the excluded region.
    #[arg(long, global = true)]
    quantile: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Jeffreys prior over tau_e at the configured critical length.
    Prior,
    /// Posterior over tau_e with summary at the configured critical length.
    Posterior,
    /// Maximise the excluded tau_e over sigma_q (and the phase nuisance).
    Macroscopicity,
    /// Likelihood maps over (tau_e, critical length) and their combination.
    Map2d,
    /// Synthetic data with a provenance header.
    Simulate,
    /// Gnuplot script for the tables in the output directory.
    Gnuplot,
}

fn options(cli: &Cli) -> Result<Options> {
    let range = |s: &Option<String>, dim| -> Result<Option<(f64, f64, usize)>> {
        s.as_deref().map(|s| parse_range(s, dim).map_err(|e| InputError(format!("grid '{s}': {e}")).into())).transpose()
    };
    Ok(Options {
        configs: cli.config.clone(),
        data: cli.data.clone(),
        out: cli.out.clone(),
        grid_tau: range(&cli.grid_tau, Dim::Time)?,
        grid_length: range(&cli.grid_length, Dim::Length)?,
        seed: cli.seed,
        quantile: cli.quantile,
    })
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| InputError(format!("--threads: {e}")))?;
    }
    let opts = options(&cli)?;
    match cli.command {
        Command::Prior => commands::prior(&opts),
        Command::Posterior => commands::posterior(&opts),
        Command::Macroscopicity => commands::macroscopicity_cmd(&opts),
        Command::Map2d => commands::map2d(&opts),
        Command::Simulate => commands::simulate(&opts),
        Command::Gnuplot => commands::gnuplot(&opts),
    }
}

/// 2 for input problems, 3 for numerical failures, 4 for data that
/// contradict the measurement model.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<macrotest::Error>() {
            return match e {
                macrotest::Error::Inconsistent(_) => 4,
                macrotest::Error::Numeric(_)
                | macrotest::Error::DegeneratePrior(_)
                | macrotest::Error::Optimization(_)
                | macrotest::Error::Model(_) => 3,
                macrotest::Error::Domain(_) | macrotest::Error::Config(_) | macrotest::Error::AxisMismatch(_) => 2,
            };
        }
    }
    2
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
