//! Command-line front end: single searches, benchmark runs, budget sweeps,
//! trace replay and scripted suite generation.

use clap::{Parser, Subcommand};

pub mod bench;
pub mod config;
pub mod exit;
pub mod generate;
pub mod replay;
pub mod run;
pub mod stack;
pub mod sweep;

#[derive(Debug, Parser)]
#[command(name = "hgmcts", version, about = "Checklist-guided tree search for multi-step information seeking")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search one query and print the answer.
    Run(run::RunArgs),
    /// Run every item of a dataset and score the answers.
    Bench(bench::BenchArgs),
    /// Run a scenario suite at several simulation budgets.
    Sweep(sweep::SweepArgs),
    /// Compare two traces, ignoring timestamps.
    Replay(replay::ReplayArgs),
    /// Write a planted-document scenario suite and a matching dataset.
    Generate(generate::GenerateArgs),
}

/// Run a parsed command; the value is the process exit code.
pub fn dispatch(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Run(a) => run::run(&a),
        Command::Bench(a) => bench::bench(&a),
        Command::Sweep(a) => sweep::sweep(&a),
        Command::Replay(a) => replay::replay(&a),
        Command::Generate(a) => generate::generate(&a),
    }
}
