//! `levcav`: configuration-driven front end: derive parameters, sweep the
//! theory, run stochastic simulations, analyze spectra, and calibrate
//! positions, emitting reproducible CSV/JSON artifacts.

mod commands;
mod config;
mod csvio;
mod error;
mod manifest;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{report_to_stderr, CliError, CliResult};

#[derive(Parser)]
#[command(name = "levcav", version, about = "Levitated-nanoparticle cavity optomechanics toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads for sweep points and seeds.
    #[arg(long)]
    jobs: Option<usize>,
    /// Replace the configured seed list with this single seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Allow replacing existing output files.
    #[arg(long)]
    overwrite: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Report every static and steady-state quantity derived from the config.
    Derive(CommonArgs),
    /// Frequency-domain theory spectra and backaction summary over detuning.
    Sweep(CommonArgs),
    /// Stochastic time-domain runs with detector traces and Welch spectra.
    Simulate(CommonArgs),
    /// Run the measurement pipeline over simulated or ingested spectra.
    Analyze {
        #[command(flatten)]
        common: CommonArgs,
        /// Directory holding the spectra to analyze; defaults to --out.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Pressure-dependent damping curve and inverse lookups.
    Gas(CommonArgs),
    /// Fit the camera-pixel-to-position calibration from a points file.
    CalibratePosition {
        #[command(flatten)]
        common: CommonArgs,
        /// CSV of calibration points: `zeta_px,omega0_hz[,sigma_hz]`.
        #[arg(long)]
        points: PathBuf,
        /// Optionally report the calibrated position of this pixel.
        #[arg(long)]
        pixel: Option<f64>,
    },
}

fn configure_jobs(jobs: Option<usize>) -> CliResult<()> {
    if let Some(n) = jobs {
        if n == 0 {
            return Err(CliError::config("--jobs must be at least 1".to_string()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run() -> CliResult<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Derive(common) => {
            configure_jobs(common.jobs)?;
            commands::derive::run(&common)
        }
        Command::Sweep(common) => {
            configure_jobs(common.jobs)?;
            commands::sweep::run(&common)
        }
        Command::Simulate(common) => {
            configure_jobs(common.jobs)?;
            commands::simulate::run(&common)
        }
        Command::Analyze { common, data } => {
            configure_jobs(common.jobs)?;
            commands::analyze::run(&common, data.as_deref())
        }
        Command::Gas(common) => {
            configure_jobs(common.jobs)?;
            commands::gas::run(&common)
        }
        Command::CalibratePosition { common, points, pixel } => {
            configure_jobs(common.jobs)?;
            commands::calibrate_position::run(&common, &points, pixel)
        }
    }
}

fn main() {
    if let Err(err) = run() {
        report_to_stderr(&err);
        std::process::exit(err.exit_code());
    }
}
