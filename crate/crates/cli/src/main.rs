//! Experiment runner for the welded-trees routing simulators.
//!
//! One binary, one subcommand per experiment; every run is seeded and emits
//! CSV with a `#`-prefixed echo of the effective configuration, so identical
//! configurations reproduce identical outputs.

mod commands;
mod config;

use clap::{Parser, Subcommand};

use config::{CommonArgs, Effective};

#[derive(Parser)]
#[command(
    name = "weldedtrees",
    about = "Quantum-walk routing and classical lower-bound experiments on welded-trees networks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance and write its edge-list file.
    GenGraph(CommonArgs),
    /// Record the walk's hitting probability over the step range.
    WalkSweep(CommonArgs),
    /// Run the routing schedule and report calls, qubits, and successes.
    Traversal(CommonArgs),
    /// Run the classical flooding baseline and report bits sent.
    Flood(CommonArgs),
    /// Estimate embedding-game win rates (and related decay experiments).
    LowerBound(CommonArgs),
    /// Chi-square check that embedded nodes are uniform within columns.
    Uniformity(CommonArgs),
    /// Quantum cost vs flooding cost vs classical win rate, per height.
    GapTable(CommonArgs),
}

type CommandFn = fn(&Effective) -> Result<(), String>;

fn main() {
    let cli = Cli::parse();
    let (name, args, run): (&str, &CommonArgs, CommandFn) =
        match &cli.command {
            Command::GenGraph(a) => ("gen-graph", a, commands::gen_graph),
            Command::WalkSweep(a) => ("walk-sweep", a, commands::walk_sweep),
            Command::Traversal(a) => ("traversal", a, commands::traversal),
            Command::Flood(a) => ("flood", a, commands::flood),
            Command::LowerBound(a) => ("lower-bound", a, commands::lower_bound),
            Command::Uniformity(a) => ("uniformity", a, commands::uniformity),
            Command::GapTable(a) => ("gap-table", a, commands::gap_table),
        };
    let result = Effective::resolve(args).and_then(|cfg| run(&cfg));
    if let Err(message) = result {
        eprintln!("weldedtrees {name}: {message}");
        std::process::exit(2);
    }
}
