//! `beltrami`: dispersion analysis, bifurcation points, kernel modes and nonlinear
//! Beltrami water waves from a TOML run configuration.
//!
//! Exit status: 0 success, 1 i/o failure, 2 config error, 3 precondition failure,
//! 4 solver non-convergence. Failures print one JSON record to stderr and write nothing.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Overrides, RunConfig};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "beltrami", version, about = "Doubly periodic Beltrami water waves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; receives report.txt, summary.csv and fields/.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the Fourier truncation N.
    #[arg(long, global = true)]
    truncation: Option<usize>,
    /// Overrides the subcommand tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// κ table, dispersion curves, ρ values and the non-resonance report.
    Dispersion,
    /// Candidate bifurcation points and their hypothesis flags.
    Bifurcate,
    /// Kernel modes at the bifurcation point and their residuals.
    Kernel,
    /// Solves v(η, c) for a given surface and reports the residuals.
    Check,
    /// Nonlinear waves over a grid of kernel amplitudes.
    Solve,
    /// 3D field of a 2D stream function.
    Lift,
    /// Stream function of a 2½-dimensional field.
    Extract,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Config("--config is required".into()))?;
    let out = cli.out.as_ref().ok_or_else(|| CliError::Config("--out is required".into()))?;
    let cfg = RunConfig::load(path, Overrides { truncation: cli.truncation, tol: cli.tol })?;
    let artifacts = match cli.command {
        Command::Dispersion => commands::dispersion(&cfg),
        Command::Bifurcate => commands::bifurcate(&cfg),
        Command::Kernel => commands::kernel(&cfg),
        Command::Check => commands::check(&cfg),
        Command::Solve => commands::solve(&cfg),
        Command::Lift => commands::lift(&cfg),
        Command::Extract => commands::extract(&cfg),
    }?;
    artifacts.write(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = serde_json::json!({ "error": e.kind(), "code": e.exit_code(), "message": e.message() });
            eprintln!("{record}");
            ExitCode::from(e.exit_code())
        }
    }
}
