//! `citeqa`: build, refine and inspect synthetic QA datasets.

mod build;
mod refine;
mod stats;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "citeqa",
    version,
    about = "Synthesize extractive QA data from cited statements"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Filter a pair corpus and write a SQuAD-1.1 dataset.
    Build(build::BuildArgs),
    /// Refine a SQuAD dataset with a QA predictor and write training batches.
    Refine(refine::RefineArgs),
    /// Print summary statistics of a SQuAD dataset as JSON.
    Stats {
        #[arg(long)]
        data: PathBuf,
    },
}

/// Failure modes mapped to exit codes.
#[derive(Debug)]
pub enum Failure {
    /// Bad input file, bad flag value, unreachable service: exit 2.
    Input(String),
    /// The run completed but produced nothing: exit 3.
    Empty(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Empty(_) => 3,
        }
    }
}

pub fn input_err(e: impl std::fmt::Display) -> Failure {
    Failure::Input(e.to_string())
}

pub fn set_workers(workers: Option<usize>) -> Result<(), Failure> {
    if let Some(n) = workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Input(format!("--workers: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Build(args) => build::run(args),
        Command::Refine(args) => refine::run(args),
        Command::Stats { data } => stats::run(&data),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Input(m) => eprintln!("error: {m}"),
                Failure::Empty(m) => eprintln!("empty result: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
