use std::path::PathBuf;
use std::process::exit;

use clap::{Parser, Subcommand};

use coupled_nls::cli;

/// Critical-point toolkit for a quadratically coupled nonlinear Schrödinger
/// system: scalar ground states, coupled Newton continuation, and minimax
/// level estimates on a truncated finite-difference grid.
#[derive(Parser)]
#[command(name = "coupled-nls", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scalar ground states, levels, thresholds and ray brackets.
    Ground {
        #[arg(long)]
        config: PathBuf,
    },
    /// One coupled solve at a fixed coupling strength.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        beta: f64,
    },
    /// Full continuation experiment with CSV/summary artifacts.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Verify the potential hypotheses on the configured grid.
    CheckPotential {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() {
    let args = Cli::parse();
    let code = match args.command {
        Command::Ground { config } => cli::cmd_ground(&config),
        Command::Solve { config, beta } => cli::cmd_solve(&config, beta),
        Command::Sweep { config } => cli::cmd_sweep(&config),
        Command::CheckPotential { config } => cli::cmd_check_potential(&config),
    };
    exit(code);
}
