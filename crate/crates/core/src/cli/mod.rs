//! The `cdeoh` command line: run, evaluate, bench, replay and report.
//!
//! Every command returns the text it would print, so the binary stays a thin
//! wrapper and tests can call commands directly.

mod commands;
mod config;
mod report;
mod runlog;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::evolution::EvolutionError;
use crate::problems::{SuiteSpec, TaskKind, TspMode};

pub use commands::{
    cmd_bench, cmd_evaluate, cmd_replay, cmd_report, cmd_run, load_heuristic, RunSummary,
};
pub use config::RunConfig;
pub use report::{report_csv, report_md, summary_csv, BestRecord, ReportSummary};
pub use runlog::{
    first_divergence, read_events, read_log, to_records, LoggedEvent, RunLogWriter, EVENTS_FILE,
    POPULATIONS_DIR,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("run failed: {0}")]
    Run(#[from] EvolutionError),
    #[error("{0}")]
    Candidate(String),
    #[error("replay diverged at event {seq}: {detail}")]
    Divergence { seq: u64, detail: String },
    #[error("incomplete run: {0}")]
    IncompleteRun(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::ConfigInvalid(_) => 2,
            _ => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "cdeoh",
    version,
    about = "Evolve priority-function heuristics with a language model"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an evolutionary search from a JSON config.
    Run { config: PathBuf },
    /// Score a heuristic (DSL text or best.json) on a benchmark suite.
    Evaluate {
        heuristic: PathBuf,
        #[command(flatten)]
        suite: SuiteArgs,
    },
    /// Score the built-in baseline heuristics.
    Bench {
        #[command(flatten)]
        suite: SuiteArgs,
    },
    /// Re-execute a run from its recorded transcript and compare event logs.
    Replay { run_dir: PathBuf },
    /// Write report.csv and report.md for a finished run.
    Report { run_dir: PathBuf },
}

#[derive(Debug, Clone, Args)]
pub struct SuiteArgs {
    #[arg(long)]
    pub task: TaskKind,
    /// OBP settings like 1kC100, or TSP sizes like 200.
    #[arg(long, visible_alias = "settings", value_delimiter = ',', num_args = 0..)]
    pub sizes: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub seeds: Option<Vec<u64>>,
    #[arg(long, default_value = "uniform")]
    pub tsp_mode: TspMode,
    /// Instance JSON files added to the generated ones.
    #[arg(long, value_delimiter = ',')]
    pub instances: Vec<PathBuf>,
}

impl SuiteArgs {
    pub fn spec(&self) -> SuiteSpec {
        SuiteSpec {
            settings: self.sizes.clone(),
            seeds: self.seeds.clone(),
            tsp_mode: self.tsp_mode,
            instance_files: self.instances.clone(),
            ..SuiteSpec::default()
        }
    }
}

/// Runs one parsed command and returns its standard output.
pub fn execute(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Run { config } => cmd_run(config).map(|r| r.to_string()),
        Command::Evaluate { heuristic, suite } => {
            cmd_evaluate(heuristic, suite.task, &suite.spec())
        }
        Command::Bench { suite } => cmd_bench(suite.task, &suite.spec()),
        Command::Replay { run_dir } => cmd_replay(run_dir),
        Command::Report { run_dir } => cmd_report(run_dir),
    }
}

/// Entry point for the binary.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("cdeoh: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
