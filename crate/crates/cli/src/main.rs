//! `ppcqed` — batch experiment runner for the photon-pressure cQED
//! toolkit. Reads a strict TOML configuration, dispatches to the
//! estimator/simulation/calibration/fitting pipelines, and emits CSV
//! artifacts plus a run manifest.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numerical failure.

// Validation guards are written `!(x > 0)` so NaN inputs fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod csvio;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use commands::RunContext;
use config::ConfigFile;
use error::{CliError, CliResult};
use manifest::RunManifest;

#[derive(Parser)]
#[command(
    name = "ppcqed",
    version,
    about = "Photon-pressure cQED simulation and calibration toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic circuit-parameter estimation from device geometry.
    Estimate(RunArgs),
    /// Time-domain Rabi chevron grid.
    Chevron(RunArgs),
    /// Synthetic notch transmission spectrum.
    Spectrum(RunArgs),
    /// AC-Stark photon-number calibration.
    Calibrate(RunArgs),
    /// Least-squares notch fit of a measured/synthetic spectrum.
    FitNotch(RunArgs),
    /// Avoided-crossing fit of branch minima vs drive frequency.
    FitCrossing(RunArgs),
    /// Linear g = g0*sqrt(n) fit through the origin.
    ExtractG0(RunArgs),
    /// End-to-end synthetic g0 measurement.
    Pipeline(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to the TOML configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's `output`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed override for stochastic runs.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker-thread cap (falls back to PPCQED_THREADS, then the config).
    #[arg(long)]
    threads: Option<usize>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Estimate(_) => "estimate",
            Command::Chevron(_) => "chevron",
            Command::Spectrum(_) => "spectrum",
            Command::Calibrate(_) => "calibrate",
            Command::FitNotch(_) => "fit-notch",
            Command::FitCrossing(_) => "fit-crossing",
            Command::ExtractG0(_) => "extract-g0",
            Command::Pipeline(_) => "pipeline",
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Command::Estimate(a)
            | Command::Chevron(a)
            | Command::Spectrum(a)
            | Command::Calibrate(a)
            | Command::FitNotch(a)
            | Command::FitCrossing(a)
            | Command::ExtractG0(a)
            | Command::Pipeline(a) => a,
        }
    }
}

fn thread_cap(args: &RunArgs, cfg: &ConfigFile) -> CliResult<usize> {
    if let Some(t) = args.threads {
        return Ok(t.max(1));
    }
    if let Ok(v) = std::env::var("PPCQED_THREADS") {
        return v
            .parse::<usize>()
            .map(|t| t.max(1))
            .map_err(|_| CliError::config(format!("PPCQED_THREADS = \"{v}\" is not a number")));
    }
    Ok(cfg.threads.unwrap_or(1).max(1))
}

fn run(cmd: &Command) -> CliResult<()> {
    let args = cmd.args();
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::config(format!("reading {}: {e}", args.config.display())))?;
    let cfg = ConfigFile::parse(&text)?;
    cfg.validate_kind(cmd.name())?;

    let out_dir = args
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::config(format!("creating {}: {e}", out_dir.display())))?;
    let ctx = RunContext {
        out_dir: out_dir.clone(),
        seed: args.seed.or(cfg.seed),
        threads: thread_cap(args, &cfg)?,
    };
    let mut manifest = RunManifest::new(cmd.name(), text.as_bytes(), ctx.seed, ctx.threads);
    manifest.step(format!("parsed configuration {}", args.config.display()));

    let result = match cmd {
        Command::Estimate(_) => {
            commands::run_estimate(cfg.estimate.as_ref().unwrap(), &ctx, &mut manifest)
        }
        Command::Chevron(_) => {
            commands::run_chevron(cfg.chevron.as_ref().unwrap(), &ctx, &mut manifest)
        }
        Command::Spectrum(_) => {
            commands::run_spectrum(cfg.spectrum.as_ref().unwrap(), &ctx, &mut manifest)
        }
        Command::Calibrate(_) => {
            commands::run_calibrate(cfg.calibrate.as_ref().unwrap(), &ctx, &mut manifest)
        }
        Command::FitNotch(_) => {
            commands::run_fit_notch(cfg.fit_notch.as_ref().unwrap(), &ctx, &mut manifest)
        }
        Command::FitCrossing(_) => {
            commands::run_fit_crossing(cfg.fit_crossing.as_ref().unwrap(), &ctx, &mut manifest)
        }
        Command::ExtractG0(_) => {
            commands::run_extract_g0(cfg.extract_g0.as_ref().unwrap(), &ctx, &mut manifest)
        }
        Command::Pipeline(_) => {
            commands::run_pipeline(cfg.pipeline.as_ref().unwrap(), &ctx, &mut manifest)
        }
    };

    match &result {
        Ok(()) => manifest.step("completed".to_string()),
        Err(e) => manifest.step(format!("failed: {e}")),
    }
    manifest.write(&out_dir.join("manifest.txt"))?;
    result
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are successful exits; anything else is a
            // configuration problem.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0u8,
                _ => 1u8,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
