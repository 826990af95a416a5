//! `ahprec`: context-aware movie recommendation from the command line.
//!
//! Exit status: 0 success, 1 domain error, 2 usage error, 3 I/O error.

mod commands;
mod config;
mod error;

use clap::{Parser, Subcommand};

use commands::{AhpArgs, EvaluateArgs, RecommendArgs};
use config::RunArgs;
use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "ahprec",
    version,
    about = "Context-aware movie recommendation with AHP genre weights"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a dataset and print its counts.
    Ingest(RunArgs),
    /// Write train/test files for each split into --out.
    Split(RunArgs),
    /// Genre weights of the (context-filtered) corpus and their consistency.
    Weights(RunArgs),
    /// Eigenvector weights and consistency of judgment matrices.
    Ahp(AhpArgs),
    /// Top-n items for one user in a context.
    Recommend(RecommendArgs),
    /// Precision, recall and F-measure over one or more splits.
    Evaluate(EvaluateArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Ingest(a) => commands::ingest(a),
        Command::Split(a) => commands::split(a),
        Command::Weights(a) => commands::weights(a),
        Command::Ahp(a) => commands::ahp(a),
        Command::Recommend(a) => commands::recommend(a),
        Command::Evaluate(a) => commands::evaluate(a),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
