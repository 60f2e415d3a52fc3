//! `credal-uq`: validate prediction files, score them with credal uncertainty
//! measures, and benchmark selective prediction.
//!
//! Exit codes: 0 success, 1 other failure, 2 unreadable or malformed input,
//! 3 shape mismatch, 4 simplex violation, 5 Hartley requested above the class
//! cap, 6 true labels missing.

mod commands;
mod failure;
mod report;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{arc, bench, measure, validate};
use failure::Failure;

#[derive(Debug, Parser)]
#[command(name = "credal-uq", version, about)]
struct Cli {
    /// Worker threads for per-instance scoring; defaults to all cores.
    #[arg(long, global = true, env = "CREDAL_UQ_THREADS")]
    threads: Option<usize>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a prediction file and list every problem with its location.
    Validate(validate::ValidateArgs),
    /// Write one JSONL row of uncertainty values per instance.
    Measure(measure::MeasureArgs),
    /// Accuracy-rejection curve with AUC and monotonicity ratio.
    Arc(arc::ArcArgs),
    /// Time every measure over a grid of class counts and ensemble sizes.
    Bench(bench::BenchArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            log::warn!("could not size the worker pool: {e}");
        }
    }

    let outcome = match &cli.command {
        Command::Validate(args) => validate::run(args),
        Command::Measure(args) => measure::run(args),
        Command::Arc(args) => arc::run(args),
        Command::Bench(args) => bench::run(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(err.downcast_ref::<Failure>().map_or(1, |f| f.code))
        }
    }
}
