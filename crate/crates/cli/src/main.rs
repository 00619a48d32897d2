//! `eenas` — multi-objective evolutionary architecture search with
//! early-exit population initialisation.
//!
//! Subcommands: `search` (run a configured search), `decode` (genotype →
//! DOT graph + cost report), `hv` (recompute metrics CSVs from a run
//! log), `benchgen` (synthesize a full NB201-style benchmark table), and
//! `validate-config`.

mod commands;
mod config;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use thiserror::Error;

/// Exit codes: 0 ok, 2 config error, 3 infeasible budget, 4 evaluator
/// failure, 5 I/O error.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    InfeasibleBudget(String),
    #[error("{0}")]
    Evaluator(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::InfeasibleBudget(_) => 3,
            CliError::Evaluator(_) => 4,
            CliError::Io(_) => 5,
        }
    }
}

impl From<eenas_core::EngineError> for CliError {
    fn from(e: eenas_core::EngineError) -> CliError {
        use eenas_core::EngineError;
        match e {
            EngineError::Eepi(eenas_core::EepiError::BudgetInfeasible { .. }) => {
                CliError::InfeasibleBudget(e.to_string())
            }
            EngineError::Evaluation { .. } => CliError::Evaluator(e.to_string()),
            EngineError::Sink(io) => CliError::Io(io.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "eenas", version, about = "Early-exit evolutionary architecture search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a search from a config file and write the run directory.
    Search {
        /// TOML configuration file.
        #[arg(long)]
        config: PathBuf,
        /// Override the configured seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the configured parameter budget (millions).
        #[arg(long)]
        beta: Option<f64>,
        /// Override the configured generation count.
        #[arg(long)]
        generations: Option<usize>,
        /// Override the configured population size.
        #[arg(long)]
        population: Option<usize>,
        /// Override the configured output directory.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Decode a genotype into a DOT graph and a cost report.
    Decode {
        /// Genotype text (cell-based pairs or NB201 comma vector).
        genotype: String,
        /// Optional config supplying the macro configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the DOT graph here instead of stdout.
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Write the cost JSON here instead of stdout.
        #[arg(long)]
        cost: Option<PathBuf>,
    },
    /// Recompute metrics CSVs from a run log.
    Hv {
        /// Run log (JSONL) produced by `search`.
        #[arg(long)]
        log: PathBuf,
        /// Output directory for the CSVs (default: the log's directory).
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Synthesize a full NB201-style benchmark table from the surrogate.
    Benchgen {
        /// Output path for the JSONL table.
        #[arg(long)]
        out: PathBuf,
        /// Jitter seed for the synthetic test-error column.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Optional config supplying the macro configuration.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Parse and validate a config file.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() {
    env_logger::init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Search { config, seed, beta, generations, population, output_dir } => {
            commands::search::run(&config, seed, beta, generations, population, output_dir)
        }
        Command::Decode { genotype, config, dot, cost } => {
            commands::decode::run(&genotype, config.as_deref(), dot.as_deref(), cost.as_deref())
        }
        Command::Hv { log, out_dir } => commands::hv::run(&log, out_dir.as_deref()),
        Command::Benchgen { out, seed, config } => {
            commands::benchgen::run(&out, seed, config.as_deref())
        }
        Command::ValidateConfig { config } => commands::validate_config(&config),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
