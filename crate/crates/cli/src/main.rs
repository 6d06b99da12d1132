//! `pass`: simulate a mandatory-lane-change cohort, score it with PASS and the
//! relative-spacing baseline, calibrate the scaling coefficients and report.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

#[derive(Debug, Parser)]
#[command(name = "pass", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Options,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate the synthetic cohort and write trajectory CSVs plus a manifest.
    Simulate,
    /// Score every run with PASS and the baseline; write per-tick traces.
    Evaluate,
    /// Grid-search (k1, k2) against travel-time rankings.
    Calibrate,
    /// Rank correlation of both metrics with travel time, per event.
    Compare,
    /// Consolidate the outputs of the other commands into one summary.
    Report,
}

/// Flags shared by every command; each overrides the config file.
#[derive(Debug, Args)]
pub struct Options {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Cohort seed.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Use only the first N events of the preset.
    #[arg(long, global = true, value_name = "N")]
    pub events: Option<usize>,
    /// Ego runs per event.
    #[arg(long, global = true, value_name = "N")]
    pub runs: Option<usize>,
    /// Existing dataset (directory or manifest) instead of `<out>/dataset`.
    #[arg(long, global = true, value_name = "PATH")]
    pub dataset: Option<PathBuf>,
    /// Calibration range of k1, `LOW,HIGH`.
    #[arg(long, global = true, value_name = "LOW,HIGH", allow_hyphen_values = true, value_parser = parse_range)]
    pub k1_range: Option<[f64; 2]>,
    /// Calibration range of k2, `LOW,HIGH`.
    #[arg(long, global = true, value_name = "LOW,HIGH", allow_hyphen_values = true, value_parser = parse_range)]
    pub k2_range: Option<[f64; 2]>,
    /// Calibration grid step.
    #[arg(long, global = true)]
    pub step: Option<f64>,
    /// Coefficients to evaluate or compare at; defaults to the calibrated
    /// pair when `<out>/calibration.json` exists, else the configured pair.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub k1: Option<f64>,
    #[arg(long, global = true)]
    pub k2: Option<f64>,
    /// Treat warnings (skipped vehicles, excluded events, speeding) as errors.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
}

fn parse_range(text: &str) -> Result<[f64; 2], String> {
    let (lo, hi) = text
        .split_once(',')
        .ok_or_else(|| format!("expected LOW,HIGH, got {text:?}"))?;
    let num = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("{s:?}: {e}"));
    Ok([num(lo)?, num(hi)?])
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate => commands::simulate(&cli.opts),
        Command::Evaluate => commands::evaluate(&cli.opts),
        Command::Calibrate => commands::calibrate(&cli.opts),
        Command::Compare => commands::compare(&cli.opts),
        Command::Report => commands::report(&cli.opts),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
