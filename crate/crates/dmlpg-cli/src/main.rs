//! Batch front-end: parse a run configuration, execute the solver or a
//! study, and write CSV tables plus a manifest of the resolved settings.
//!
//! Exit codes: 0 on success, 2 on configuration errors, 3 on solver
//! failures.

mod config;
mod runner;

use clap::{Parser, Subcommand};
use config::parse_config;
use runner::CliError;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "dmlpg", about = "Meshless transient heat conduction solver", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configured problem and write solution/error/timing CSVs.
    Solve {
        /// Configuration file (`key = value` lines, `#` comments).
        #[arg(long)]
        config: PathBuf,
        /// Output directory (defaults to `out_dir` from the config, then `out`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Grid-sequence studies on the exact-solution test problem.
    #[command(subcommand)]
    Study(StudyCommand),
}

#[derive(Subcommand)]
enum StudyCommand {
    /// Error convergence over `h_list`; writes errors.csv.
    Convergence {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Assembly/solve wall times over `h_list`; writes timings.csv.
    Timing {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(path: &Path) -> Result<config::RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| CliError::Config(e.to_string()))
}

fn out_dir(cfg: &config::RunConfig, cli_out: Option<PathBuf>) -> PathBuf {
    cli_out
        .or_else(|| cfg.out_dir.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve { config, out } => {
            let cfg = load_config(&config)?;
            runner::run_solve(&cfg, &out_dir(&cfg, out))
        }
        Command::Study(StudyCommand::Convergence { config, out }) => {
            let cfg = load_config(&config)?;
            runner::run_convergence(&cfg, &out_dir(&cfg, out))
        }
        Command::Study(StudyCommand::Timing { config, out }) => {
            let cfg = load_config(&config)?;
            runner::run_timing(&cfg, &out_dir(&cfg, out))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Solver(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
