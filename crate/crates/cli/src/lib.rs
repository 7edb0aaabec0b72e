//! Argument surface and dispatch for the `chainboost` binary.
//!
//! * `run`      — one simulation from a config file and/or flag overrides
//! * `campaign` — the built-in experiment batches, written as CSV
//! * `analyze`  — closed-form committee-failure numbers
//! * `por`      — proof-of-retrievability self-test

pub mod analyze;
pub mod campaign;
pub mod por_check;
pub mod run;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "chainboost",
    version,
    about = "Deterministic simulator and analysis tools for a mutually-dependent \
             sidechain offloading a blockchain resource market"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Execute one simulation run and report the results as JSON.
    Run(run::RunArgs),
    /// Execute built-in experiment campaigns and write per-run CSV rows.
    Campaign(campaign::CampaignArgs),
    /// Closed-form and empirical committee-failure analysis.
    #[command(subcommand)]
    Analyze(analyze::AnalyzeCmd),
    /// Proofs of retrievability.
    #[command(subcommand)]
    Por(por_check::PorCmd),
}

pub fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run(args) => run::exec(args),
        Command::Campaign(args) => campaign::exec(args),
        Command::Analyze(cmd) => analyze::exec(cmd),
        Command::Por(cmd) => por_check::exec(cmd),
    }
}
