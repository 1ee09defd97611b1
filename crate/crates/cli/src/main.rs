//! `charpent`: command-line front end of the hyperbolic Cauchy problem lab.
//!
//! Exit statuses: 0 success, 1 usage error, 2 invalid config, 3 non-hyperbolic
//! symbol, 4 verification or solve failure.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "charpent",
    version,
    about = "Cauchy problem lab for fourth-order hyperbolic equations in the plane"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify the symbol and print roots and factor directions.
    Classify(Common),
    /// Solve on the domain of determinacy and write the grid as CSV.
    Solve(Common),
    /// Check the flux, initial-line and kernel identities.
    Green(Common),
    /// Check one instance of the maximum principle.
    Maxprin(Common),
    /// Run a seeded batch of maximum-principle instances.
    MaxprinBatch(Common),
    /// Tabulate ring integrals for the wave operator on the unit disk.
    WaveDisk(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (CSV or JSON depending on the command).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Generator seed for maxprin, first seed for maxprin-batch.
    #[arg(long)]
    seed: Option<u64>,
    /// Grid step, overriding the config.
    #[arg(long)]
    h: Option<f64>,
    /// Batch size for maxprin-batch, overriding the config.
    #[arg(long)]
    n: Option<usize>,
    /// Flip the sign of one initial-line trace (test hook).
    #[arg(long, hide = true)]
    inject_trace_fault: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Classify(a) => commands::classify(&a),
        Command::Solve(a) => commands::solve(&a),
        Command::Green(a) => commands::green(&a),
        Command::Maxprin(a) => commands::maxprin(&a),
        Command::MaxprinBatch(a) => commands::maxprin_batch(&a),
        Command::WaveDisk(a) => commands::wave_disk(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("charpent: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
