//! The `search` subcommand: early-exit initialisation plus the full
//! generational loop, persisting a self-describing run directory:
//!
//! ```text
//! <output_dir>/
//!   config.toml       resolved config snapshot (re-runnable)
//!   run.jsonl         one GenerationRecord per line
//!   generations.csv   per-generation metrics
//!   scatter.csv       per-individual objectives per generation
//!   pareto.json       final-population Pareto front
//!   selected.json     the k_final models picked at equal error spacing
//! ```

use crate::config::{EvaluatorBinding, RawConfig, ResolvedConfig};
use crate::CliError;
use eenas_core::evaluators::{
    Evaluator, ExternalEvaluator, SurrogateEvaluator, TabularBenchmark, TabularEvaluator,
};
use eenas_core::evolution::engine::Engine;
use eenas_core::evolution::Individual;
use eenas_core::metrics::{write_generation_csv, write_scatter_csv};
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Serialize)]
struct ReportedModel {
    genotype: String,
    error: f64,
    flops_m: f64,
    params_m: f64,
}

impl From<&Individual> for ReportedModel {
    fn from(m: &Individual) -> ReportedModel {
        let o = m.objectives.expect("final front is evaluated");
        ReportedModel {
            genotype: m.key.clone(),
            error: o.error,
            flops_m: o.flops,
            params_m: o.params,
        }
    }
}

pub fn run(
    config_path: &Path,
    seed: Option<u64>,
    beta: Option<f64>,
    generations: Option<usize>,
    population: Option<usize>,
    output_dir: Option<PathBuf>,
) -> Result<(), CliError> {
    let mut raw = RawConfig::load(config_path)?;
    if seed.is_some() {
        raw.search.seed = seed;
    }
    if beta.is_some() {
        raw.search.beta = beta;
    }
    if generations.is_some() {
        raw.search.generations = generations;
    }
    if population.is_some() {
        raw.search.population = population;
    }
    if output_dir.is_some() {
        raw.search.output_dir = output_dir;
    }
    let resolved = raw.resolve()?;
    execute(&resolved, &raw)?;
    println!("{}", resolved.output_dir.display());
    Ok(())
}

pub fn execute(resolved: &ResolvedConfig, raw: &RawConfig) -> Result<(), CliError> {
    std::fs::create_dir_all(&resolved.output_dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", resolved.output_dir.display())))?;

    let snapshot = RawConfig::snapshot(resolved, &raw.evaluator);
    let snapshot_text = toml::to_string_pretty(&snapshot)
        .map_err(|e| CliError::Config(format!("cannot serialize config snapshot: {e}")))?;
    write_file(&resolved.output_dir.join("config.toml"), snapshot_text.as_bytes())?;

    let mut evaluator = build_evaluator(resolved)?;

    let mut engine = Engine::new(resolved.params.clone())?;
    let log_path = resolved.output_dir.join("run.jsonl");
    let mut log = std::io::BufWriter::new(
        std::fs::File::create(&log_path)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", log_path.display())))?,
    );
    let records = engine.run(evaluator.as_mut(), |record| {
        let line = serde_json::to_string(record).expect("record serializes");
        log.write_all(line.as_bytes())?;
        log.write_all(b"\n")
    })?;
    log.flush().map_err(|e| CliError::Io(e.to_string()))?;
    drop(log);

    let mut generations_csv = Vec::new();
    write_generation_csv(&records, &mut generations_csv).map_err(|e| CliError::Io(e.to_string()))?;
    write_file(&resolved.output_dir.join("generations.csv"), &generations_csv)?;

    let mut scatter_csv = Vec::new();
    write_scatter_csv(&records, &mut scatter_csv).map_err(|e| CliError::Io(e.to_string()))?;
    write_file(&resolved.output_dir.join("scatter.csv"), &scatter_csv)?;

    let front: Vec<ReportedModel> = engine.final_front().into_iter().map(Into::into).collect();
    write_json(&resolved.output_dir.join("pareto.json"), &front)?;

    let selected: Vec<ReportedModel> =
        engine.select_final().iter().map(Into::into).collect();
    write_json(&resolved.output_dir.join("selected.json"), &selected)?;

    Ok(())
}

fn build_evaluator(resolved: &ResolvedConfig) -> Result<Box<dyn Evaluator>, CliError> {
    Ok(match &resolved.evaluator {
        EvaluatorBinding::Surrogate { workers } => Box::new(
            SurrogateEvaluator::new(resolved.params.macro_cfg).with_workers(*workers),
        ),
        EvaluatorBinding::Tabular { table } => {
            let bench = TabularBenchmark::load(table)
                .map_err(|e| CliError::Config(format!("benchmark table: {e}")))?;
            Box::new(TabularEvaluator::new(bench))
        }
        EvaluatorBinding::External { command, workers, timeout } => {
            Box::new(ExternalEvaluator::new(command.clone(), *workers, *timeout))
        }
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Io(format!("cannot serialize {}: {e}", path.display())))?;
    text.push('\n');
    write_file(path, text.as_bytes())
}
