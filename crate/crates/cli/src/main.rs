use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};
use tracing_subscriber::EnvFilter;

mod batch;
mod field;

#[derive(Debug, Parser)]
#[command(name = "sbs", version, about = "Score-biased search mapping: simulation, analysis and field coordination")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate fractional Brownian truth maps.
    GenMaps(batch::GenMapsArgs),
    /// Run one strategy over a map set at one or more agent counts.
    Simulate(batch::SimulateArgs),
    /// Full-factorial sweep over the score weights.
    Sweep(batch::SweepArgs),
    /// Margin-shifted Welch comparison of two simulate outputs.
    Analyze(batch::AnalyzeArgs),
    /// Run the field coordinator.
    Serve(field::ServeArgs),
    /// Rebuild a session from its event log.
    Replay(field::ReplayArgs),
    /// Drive a session with simulated operators.
    OperatorSim(field::OperatorSimArgs),
}

fn out_dir(p: &PathBuf) -> Result<()> {
    std::fs::create_dir_all(p).map_err(|e| anyhow::anyhow!("creating {}: {e}", p.display()))
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    match Cli::parse().command {
        Command::GenMaps(a) => batch::gen_maps(a),
        Command::Simulate(a) => batch::simulate(a),
        Command::Sweep(a) => batch::sweep(a),
        Command::Analyze(a) => batch::analyze(a),
        Command::Serve(a) => field::serve(a),
        Command::Replay(a) => field::replay(a),
        Command::OperatorSim(a) => field::operator_sim(a),
    }
}
