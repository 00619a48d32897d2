//! Declarative run configuration.
//!
//! A config file is TOML with five sections, every field optional; the
//! unset ones fall back to the selected space's defaults (cell-based:
//! 30 generations of 40; NB201: 10 generations of 100, mutation 0.1,
//! tournament 10). Flags override file values. The `search` subcommand
//! writes the fully resolved config into the run directory, and re-running
//! from that snapshot reproduces the run byte for byte.

use eenas_core::cost_model::MacroConfig;
use eenas_core::evolution::engine::{FailurePolicy, SearchParams};
use eenas_core::evolution::ObjectiveWeights;
use eenas_core::search_space::SpaceKind;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::time::Duration;

use crate::CliError;

/// Environment variable naming the default output base directory.
pub const OUTPUT_DIR_ENV: &str = "EENAS_OUTPUT_DIR";

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default)]
    pub search: RawSearch,
    #[serde(default)]
    pub weights: RawWeights,
    #[serde(default, rename = "macro")]
    pub macro_cfg: RawMacro,
    #[serde(default)]
    pub evolution: RawEvolution,
    #[serde(default)]
    pub evaluator: RawEvaluator,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSearch {
    pub space: Option<SpaceKind>,
    pub generations: Option<usize>,
    pub population: Option<usize>,
    pub beta: Option<f64>,
    pub seed: Option<u64>,
    pub k_final: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawWeights {
    pub error: Option<f64>,
    pub flops: Option<f64>,
    pub params: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawMacro {
    pub total_cells: Option<usize>,
    pub init_channels: Option<u64>,
    pub input_resolution: Option<u64>,
    pub inv_res_expansion: Option<u64>,
    pub num_classes: Option<u64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawEvolution {
    pub tournament_size: Option<usize>,
    pub mutation_prob: Option<f64>,
    pub crossover_keep_prob: Option<f64>,
    pub strict_offspring_filter: Option<bool>,
    pub max_attempts_per_slot: Option<usize>,
    pub failure_policy: Option<FailurePolicy>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawEvaluator {
    /// `surrogate`, `tabular`, or `external`.
    pub kind: Option<String>,
    /// Benchmark table path, for `tabular`.
    pub table: Option<PathBuf>,
    /// Worker argv, for `external`.
    pub command: Option<Vec<String>>,
    pub epochs: Option<u32>,
    pub timeout_ms: Option<u64>,
    pub workers: Option<usize>,
}

/// Which fitness source a run binds to.
#[derive(Debug, Clone, PartialEq)]
pub enum EvaluatorBinding {
    Surrogate { workers: usize },
    Tabular { table: PathBuf },
    External { command: Vec<String>, workers: usize, timeout: Duration },
}

/// A fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub params: SearchParams,
    pub evaluator: EvaluatorBinding,
    pub output_dir: PathBuf,
    pub epochs: u32,
    pub timeout_ms: u64,
    pub workers: usize,
}

impl RawConfig {
    pub fn load(path: &Path) -> Result<RawConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
    }

    /// Fill every unset field from the space defaults and validate.
    pub fn resolve(&self) -> Result<ResolvedConfig, CliError> {
        let space = self.search.space.unwrap_or(SpaceKind::CellBased);
        let defaults = SearchParams::defaults(space);
        let macro_defaults = MacroConfig::for_space(space);

        let weights = match (self.weights.error, self.weights.flops, self.weights.params) {
            (None, None, None) => ObjectiveWeights::default(),
            (e, f, p) => ObjectiveWeights::new(
                e.unwrap_or(1.0 / 3.0),
                f.unwrap_or(1.0 / 3.0),
                p.unwrap_or(1.0 / 3.0),
            )
            .map_err(|err| CliError::Config(err.to_string()))?,
        };

        let params = SearchParams {
            space,
            generations: self.search.generations.unwrap_or(defaults.generations),
            population: self.search.population.unwrap_or(defaults.population),
            weights,
            seed: self.search.seed.unwrap_or(defaults.seed),
            macro_cfg: MacroConfig {
                total_cells: self.macro_cfg.total_cells.unwrap_or(macro_defaults.total_cells),
                init_channels: self.macro_cfg.init_channels.unwrap_or(macro_defaults.init_channels),
                input_resolution: self
                    .macro_cfg
                    .input_resolution
                    .unwrap_or(macro_defaults.input_resolution),
                inv_res_expansion: self
                    .macro_cfg
                    .inv_res_expansion
                    .unwrap_or(macro_defaults.inv_res_expansion),
                num_classes: self.macro_cfg.num_classes.unwrap_or(macro_defaults.num_classes),
            },
            beta: self.search.beta.unwrap_or(defaults.beta),
            max_attempts_per_slot: self
                .evolution
                .max_attempts_per_slot
                .unwrap_or(defaults.max_attempts_per_slot),
            tournament_size: self.evolution.tournament_size.unwrap_or(defaults.tournament_size),
            mutation_prob: self.evolution.mutation_prob.unwrap_or(defaults.mutation_prob),
            crossover_keep_prob: self
                .evolution
                .crossover_keep_prob
                .unwrap_or(defaults.crossover_keep_prob),
            k_final: self.search.k_final.unwrap_or(defaults.k_final),
            strict_offspring_filter: self
                .evolution
                .strict_offspring_filter
                .unwrap_or(defaults.strict_offspring_filter),
            failure_policy: self.evolution.failure_policy.unwrap_or(defaults.failure_policy),
            epochs: self.evaluator.epochs.unwrap_or(defaults.epochs),
        };
        params.validate().map_err(|e| CliError::Config(e.to_string()))?;

        let workers = self.evaluator.workers.unwrap_or(1).max(1);
        let timeout_ms = self.evaluator.timeout_ms.unwrap_or(30_000);
        let kind = self.evaluator.kind.as_deref().unwrap_or("surrogate");
        let evaluator = match kind {
            "surrogate" => EvaluatorBinding::Surrogate { workers },
            "tabular" => {
                let table = self.evaluator.table.clone().ok_or_else(|| {
                    CliError::Config("evaluator.kind = \"tabular\" needs evaluator.table".into())
                })?;
                EvaluatorBinding::Tabular { table }
            }
            "external" => {
                let command = self.evaluator.command.clone().unwrap_or_default();
                if command.is_empty() {
                    return Err(CliError::Config(
                        "evaluator.kind = \"external\" needs a non-empty evaluator.command".into(),
                    ));
                }
                EvaluatorBinding::External {
                    command,
                    workers,
                    timeout: Duration::from_millis(timeout_ms),
                }
            }
            other => {
                return Err(CliError::Config(format!(
                    "unknown evaluator.kind `{other}` (expected surrogate, tabular, or external)"
                )))
            }
        };

        let output_dir = self.search.output_dir.clone().unwrap_or_else(|| {
            let base = std::env::var_os(OUTPUT_DIR_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("runs"));
            base.join(format!("run-{}", params.seed))
        });

        let epochs = params.epochs;
        Ok(ResolvedConfig { params, evaluator, output_dir, epochs, timeout_ms, workers })
    }

    /// The fully explicit form of this config, suitable as a snapshot.
    pub fn snapshot(resolved: &ResolvedConfig, evaluator: &RawEvaluator) -> RawConfig {
        let p = &resolved.params;
        RawConfig {
            search: RawSearch {
                space: Some(p.space),
                generations: Some(p.generations),
                population: Some(p.population),
                beta: Some(p.beta),
                seed: Some(p.seed),
                k_final: Some(p.k_final),
                output_dir: Some(resolved.output_dir.clone()),
            },
            weights: RawWeights {
                error: Some(p.weights.error),
                flops: Some(p.weights.flops),
                params: Some(p.weights.params),
            },
            macro_cfg: RawMacro {
                total_cells: Some(p.macro_cfg.total_cells),
                init_channels: Some(p.macro_cfg.init_channels),
                input_resolution: Some(p.macro_cfg.input_resolution),
                inv_res_expansion: Some(p.macro_cfg.inv_res_expansion),
                num_classes: Some(p.macro_cfg.num_classes),
            },
            evolution: RawEvolution {
                tournament_size: Some(p.tournament_size),
                mutation_prob: Some(p.mutation_prob),
                crossover_keep_prob: Some(p.crossover_keep_prob),
                strict_offspring_filter: Some(p.strict_offspring_filter),
                max_attempts_per_slot: Some(p.max_attempts_per_slot),
                failure_policy: Some(p.failure_policy),
            },
            evaluator: RawEvaluator {
                kind: Some(
                    match resolved.evaluator {
                        EvaluatorBinding::Surrogate { .. } => "surrogate",
                        EvaluatorBinding::Tabular { .. } => "tabular",
                        EvaluatorBinding::External { .. } => "external",
                    }
                    .to_string(),
                ),
                table: evaluator.table.clone(),
                command: evaluator.command.clone(),
                epochs: Some(resolved.epochs),
                timeout_ms: Some(resolved.timeout_ms),
                workers: Some(resolved.workers),
            },
        }
    }
}
