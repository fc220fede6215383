mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use config::Config;
use output::OutCtx;

/// Simulate a reconfigurable four-mode interferometer, score probe
/// settings by Fisher information, tune the measurement phases, and run
/// Bayesian estimation studies. Results land as CSV/JSON in the output
/// directory, stamped with a config fingerprint and the seed.
#[derive(Parser)]
#[command(name = "fringe", version)]
struct Cli {
    /// Sectioned key=value config file; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed; every random stream derives from it.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,

    /// Output directory. Falls back to $FRINGE_OUT_DIR, then ./out.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads; 0 keeps the runtime default.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Information content of probe settings -> fisher.csv
    Fisher {
        /// Closed-form values only; skip the sampled estimates.
        #[arg(long)]
        analytic: bool,
    },
    /// Tune measurement phases at one probe point -> optimize.csv/.json
    Optimize,
    /// Estimation studies; [study] kind = trial | noise | reference
    Estimate,
    /// Photon-distinguishability sweep -> hom.csv, hom_reference.csv
    Hom,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    fringe::exec::configure_threads(cli.jobs);
    let cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let out_dir = cli
        .out
        .clone()
        .or_else(|| std::env::var_os("FRINGE_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let ctx = OutCtx::new(out_dir, cfg.hash16(), cli.seed)?;

    let failures = match cli.command {
        Command::Fisher { analytic } => commands::run_fisher(&cfg, &ctx, analytic)?,
        Command::Optimize => commands::run_optimize(&cfg, &ctx)?,
        Command::Estimate => commands::run_estimate(&cfg, &ctx)?,
        Command::Hom => commands::run_hom(&cfg, &ctx)?,
    };
    for f in &failures {
        eprintln!("failed: {}: {}", f.unit, f.message);
    }
    Ok(failures.is_empty())
}
