//! `fallwave run|wep|ripple|converge --config <path> --out <path>`
//!
//! Exit codes: 0 pass, 1 completed but the criterion was not met,
//! 2 validation error, 3 runtime abort.

// `!(x > 0.0)` is used on purpose: it rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Outcome;

#[derive(Parser)]
#[command(
    name = "fallwave",
    version,
    about = "Wave packets in a freely falling frame"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Paths {
    /// Scenario file (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Output file (CSV for run, JSON otherwise)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a packet and write its moments next to the classical orbit
    Run(Paths),
    /// Compare orbits across masses or packet shapes
    Wep(Paths),
    /// Check the wave-vector shift of a single tidal step
    Ripple(Paths),
    /// Fit the splitting order over a list of step sizes
    Converge(Paths),
}

/// `SIM_THREADS` caps the worker pool; unset or 0 lets rayon decide.
fn configure_threads() -> Result<(), String> {
    let threads = match std::env::var("SIM_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| format!("SIM_THREADS must be a whole number, got '{v}'"))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| format!("cannot start worker pool: {e}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match configure_threads() {
        Err(msg) => Outcome::Invalid(msg),
        Ok(()) => match &cli.command {
            Command::Run(p) => commands::run(&p.config, &p.out),
            Command::Wep(p) => commands::wep(&p.config, &p.out),
            Command::Ripple(p) => commands::ripple(&p.config, &p.out),
            Command::Converge(p) => commands::converge(&p.config, &p.out),
        },
    };
    match &outcome {
        Outcome::Pass => {}
        Outcome::NotMet(msg) => eprintln!("criterion not met: {msg}"),
        Outcome::Invalid(msg) => eprintln!("error: {msg}"),
        Outcome::Aborted(msg) => eprintln!("aborted: {msg}"),
    }
    ExitCode::from(outcome.exit_code())
}
