//! `gkdv`: simulation, verification sweeps and continuation planning for the
//! periodic generalized KdV equation.
//!
//! Exit status: 0 on success, 1 when a verification exceeds its configured
//! bound or a run fails, 2 on usage and parameter errors.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{bilinear, energy, multipliers, plan, rescale, simulate};

#[derive(Debug, Parser)]
#[command(name = "gkdv", version, about = "Spectral experiments for the periodic generalized KdV equation")]
struct Cli {
    /// JSON file with parameters, flat or keyed by subcommand; flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Write the primary output here instead of stdout, plus a `<path>.manifest.json` sidecar.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate the equation and stream energy diagnostics as CSV.
    #[command(after_help = simulate::CSV_HELP)]
    Simulate(simulate::Args),
    /// Sample the multiplier bounds and report the largest ratios.
    VerifyMultipliers(multipliers::Args),
    /// Counting-set bound and bilinear Strichartz ratios.
    VerifyBilinear(bilinear::Args),
    /// Compare the multiplier form of d/dt E(Iu) with the chain-rule oracle.
    VerifyEnergy(energy::Args),
    /// Check the scaling identities and the rescaled-solution correspondence.
    RescaleCheck(rescale::Args),
    /// Regularity threshold and continuation plan in exact arithmetic.
    Plan(plan::Args),
    /// Print the version.
    Version,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    /// A verification exceeded its bound; the report has been written.
    Failed(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<gkdv_core::Error> for CliError {
    fn from(e: gkdv_core::Error) -> Self {
        use gkdv_core::Error as E;
        match e {
            E::InvalidParameter(_) | E::Precondition(_) | E::Aliasing { .. } | E::Resolution(_) | E::TooLarge { .. } => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Runtime(other.into()),
        }
    }
}

fn configure_threads() {
    if let Ok(v) = std::env::var("GKDV_THREADS") {
        match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    log::warn!("could not size the thread pool: {e}");
                }
            }
            _ => log::warn!("ignoring GKDV_THREADS={v:?}"),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    configure_threads();
    let ctx = commands::Context {
        config: cli.config.as_deref(),
        out: cli.out.as_deref(),
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate::run(a, &ctx),
        Command::VerifyMultipliers(a) => multipliers::run(a, &ctx),
        Command::VerifyBilinear(a) => bilinear::run(a, &ctx),
        Command::VerifyEnergy(a) => energy::run(a, &ctx),
        Command::RescaleCheck(a) => rescale::run(a, &ctx),
        Command::Plan(a) => plan::run(a, &ctx),
        Command::Version => {
            println!("gkdv {}", output::ARTIFACT_VERSION);
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Failed(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
