//! `freqrise`: generate benchmarks, train the reference classifier,
//! compute relevance maps, and score them.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::UsageError;

#[derive(Parser)]
#[command(
    name = "freqrise",
    version,
    about = "Masking-based relevance maps for time-series classifiers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic benchmark dataset with known ground truth
    GenData(commands::GenDataArgs),
    /// Train the reference network on a dataset
    Train(commands::TrainArgs),
    /// Compute relevance maps for dataset samples
    Explain(commands::ExplainArgs),
    /// Score relevance maps: localization, faithfulness, complexity
    Evaluate(commands::EvaluateArgs),
    /// Grid-search the postprocessing quantile
    SweepPostprocess(commands::SweepArgs),
    /// Serve the line-delimited JSON model protocol on stdin/stdout
    StubEndpoint(commands::StubArgs),
}

/// `FREQRISE_THREADS` caps the worker pool. Results do not depend on it;
/// it exists to keep the tool polite on shared machines.
fn init_threads() {
    let Ok(raw) = std::env::var("FREQRISE_THREADS") else {
        return;
    };
    match raw.parse::<usize>() {
        Ok(n) if n >= 1 => {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        _ => eprintln!("warning: ignoring FREQRISE_THREADS={raw:?} (want a positive integer)"),
    }
}

fn main() -> ExitCode {
    init_threads();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenData(args) => commands::gen_data(args),
        Command::Train(args) => commands::train(args),
        Command::Explain(args) => commands::explain_cmd(args),
        Command::Evaluate(args) => commands::evaluate(args),
        Command::SweepPostprocess(args) => commands::sweep_postprocess(args),
        Command::StubEndpoint(args) => commands::stub_endpoint(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
