//! Command-line front end: scenario runs, analytic predictions, strength
//! sweeps and numeric-vs-analytic comparison reports.
//!
//! Exit codes: 0 success, 2 configuration/regime error, 3 partial sweep.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::CliError;
use config::{Mode, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "wavepacket",
    about = "Rotating Gaussian wave packets crossing a weak potential ridge: \
             grid simulation, eikonal prediction, sweeps and comparisons"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate the configured scenario on the grid and write the
    /// observable time series as CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path (default observables.csv).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Analytic Delta-L prediction (generic pipeline + closed form); never
    /// runs the grid.
    Predict {
        #[arg(long)]
        config: PathBuf,
        /// Output JSON path (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Use finite-difference derivative blocks instead of the analytic
        /// ones.
        #[arg(long = "no-analytic-blocks")]
        no_analytic_blocks: bool,
    },
    /// One grid run per ridge strength; writes one CSV row per V0.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated ridge strengths in eV, e.g. "-1e-14,0,1e-14".
        #[arg(long = "v0-list")]
        v0_list: String,
        /// Output CSV path (default sweep.csv).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for sweep rows (default: one per core).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Compare a simulate CSV against a predict JSON.
    Compare {
        /// Observable series CSV from `simulate`.
        series: PathBuf,
        /// Prediction JSON from `predict`.
        prediction: PathBuf,
        /// Optional JSON report output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { config, out } => {
            let cfg = load(&config)?;
            let out = out.unwrap_or_else(|| commands::default_out("simulate"));
            commands::simulate(&cfg, &out)?;
            if cfg.mode == Mode::Both {
                // honor mode = "both": drop the analytic prediction next to
                // the series
                let report = commands::predict_report(&cfg, true)?;
                let path = out.with_extension("predict.json");
                let text = serde_json::to_string_pretty(&report)
                    .map_err(|e| CliError::Config(e.to_string()))?;
                commands::write_atomic(&path, &(text + "\n"))?;
                eprintln!("wrote prediction to {}", path.display());
            }
            Ok(())
        }
        Command::Predict { config, out, no_analytic_blocks } => {
            let cfg = load(&config)?;
            commands::predict(&cfg, !no_analytic_blocks, out.as_deref())
        }
        Command::Sweep { config, v0_list, out, threads } => {
            let cfg = load(&config)?;
            let list = commands::parse_v0_list(&v0_list)?;
            let out = out.unwrap_or_else(|| commands::default_out("sweep"));
            commands::sweep(&cfg, &list, threads, &out)
        }
        Command::Compare { series, prediction, out } => {
            commands::compare(&series, &prediction, out.as_deref())
        }
    }
}

fn load(path: &std::path::Path) -> Result<config::ResolvedConfig, CliError> {
    ScenarioConfig::load(path)
        .and_then(|c| c.resolve())
        .map_err(|e| CliError::Config(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(e @ CliError::PartialSweep(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
