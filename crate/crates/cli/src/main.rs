//! `csrag`: experiment runner for retrieval-augmented counter-speech
//! generation. Every command reads the same TOML config and works against
//! artifacts under its work directory, so each stage can be rerun on its
//! own and two runs from the same config and seed produce the same bytes.
//!
//! Exit codes: 0 success, 1 partial or runtime failure, 2 invalid config or
//! missing input artifact, 3 artifact present but incompatible.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use csrag_core::CoreError;

use crate::config::{Config, Layout};

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_INCOMPATIBLE: u8 = 3;

/// A command failure plus the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub message: String,
    pub code: u8,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError { message: message.into(), code: EXIT_CONFIG }
    }

    pub fn failure(message: impl Into<String>) -> Self {
        CliError { message: message.into(), code: EXIT_FAILURE }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let code = match &e {
            CoreError::Validation(_) | CoreError::Config(_) => EXIT_CONFIG,
            CoreError::Incompatible(_) => EXIT_INCOMPATIBLE,
            _ => EXIT_FAILURE,
        };
        CliError { message: e.to_string(), code }
    }
}

#[derive(Parser)]
#[command(
    name = "csrag",
    version,
    about = "Retrieval-augmented counter-speech experiments",
    long_about = "Runs the counter-speech pipeline end to end: ingest a knowledge base, build \
retrieval indexes, generate across a retriever x model grid, score the outputs, judge systems \
pairwise, test significance, and render a report. All commands share one TOML config; artifacts \
live under its work directory."
)]
struct Cli {
    /// Path to the experiment config (TOML).
    #[arg(long, global = true, default_value = "csrag.toml")]
    config: PathBuf,

    /// Use the deterministic offline providers instead of remote APIs.
    #[arg(long, global = true)]
    stub: bool,

    /// Override run.seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override paths.work_dir from the config.
    #[arg(long, global = true)]
    work_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the knowledge base: load (or crawl) documents, then chunk them.
    Ingest,
    /// Build retrieval snapshots for the configured retriever arms.
    Index,
    /// Generate counter-speech across the retriever x model grid.
    Run(commands::run::RunArgs),
    /// Score generated outputs against the reference counter-speech.
    Evaluate,
    /// Compare two systems pairwise with an LLM judge.
    Judge(commands::judge::JudgeArgs),
    /// Run significance tests; optionally aggregate human annotations.
    Stats(commands::stats::StatsArgs),
    /// Render a Markdown report from previously computed artifacts.
    Report,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<u8, CliError> {
    let mut config = Config::load(&cli.config)?;
    if let Some(dir) = &cli.work_dir {
        config.paths.work_dir = dir.clone();
    }
    if let Some(seed) = cli.seed {
        config.run.seed = seed;
    }
    let layout = Layout::new(&config.paths.work_dir);

    match &cli.command {
        Command::Ingest => commands::ingest::run(&config, &layout),
        Command::Index => commands::index::run(&config, &layout, cli.stub),
        Command::Run(args) => commands::run::run(&config, &layout, cli.stub, args),
        Command::Evaluate => commands::evaluate::run(&config, &layout, cli.stub),
        Command::Judge(args) => commands::judge::run(&config, &layout, cli.stub, args),
        Command::Stats(args) => commands::stats::run(&config, &layout, args),
        Command::Report => commands::report::run(&config, &layout),
    }
}
