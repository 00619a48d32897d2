//! The generational search loop.
//!
//! Each step processes one generation: combine parents and offspring,
//! evaluate whatever lacks an error objective (through a genotype-keyed
//! cache, so a genotype is never evaluated twice in a run), non-dominated
//! sort, fill the next parent population front by front with weighted
//! crowding-distance truncation, then breed the next offspring from
//! tournament winners — half by uniform crossover, half by single-site
//! mutation.
//!
//! Progress is tracked against an elitist archive: the Pareto front of
//! every individual evaluated so far. The per-generation record carries
//! that front and its hypervolume against the nadir point of the first
//! generation, which makes the hypervolume series non-decreasing for any
//! deterministic evaluator.

use super::{
    crossover, crowding_distance, mutate, non_dominated_sort, select_k_pareto, tournament_select,
    EvolutionError, Individual, ObjectiveVector, ObjectiveWeights, Population,
};
use crate::cost_model::{CostError, MacroConfig};
use crate::eepi::{initialize_population, EarlyExitConfig, EepiError};
use crate::evaluators::{EvalError, EvaluationRequest, Evaluator};
use crate::metrics::{
    hypervolume3, nadir_from_first_generation, normalized_hypervolume, pareto_front,
    MetricsError, ReferencePoint,
};
use crate::rng::{derive_rng, stream};
use crate::search_space::SpaceKind;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use thiserror::Error;

/// What to do when an evaluator call fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailurePolicy {
    /// Abort the run with the evaluator's error.
    Abort,
    /// Score the individual with error 1 and its analytic costs, log, and
    /// continue.
    WorstCase,
}

/// Everything a search run needs besides the evaluator binding.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchParams {
    pub space: SpaceKind,
    pub generations: usize,
    pub population: usize,
    pub weights: ObjectiveWeights,
    pub seed: u64,
    pub macro_cfg: MacroConfig,
    /// Early-exit parameter budget in millions; 0 disables the filter.
    pub beta: f64,
    pub max_attempts_per_slot: usize,
    pub tournament_size: usize,
    pub mutation_prob: f64,
    pub crossover_keep_prob: f64,
    /// How many final-front members to report.
    pub k_final: usize,
    /// Apply the early-exit budget to offspring too, not just the first
    /// generation.
    pub strict_offspring_filter: bool,
    pub failure_policy: FailurePolicy,
    /// Epoch hint forwarded to evaluators.
    pub epochs: u32,
}

impl SearchParams {
    /// Search defaults per space: 30 generations of 40 for the cell-based
    /// space; 10 generations of 100 with mutation 0.1 and tournament 10
    /// for NB201.
    pub fn defaults(space: SpaceKind) -> SearchParams {
        let (generations, population) = match space {
            SpaceKind::CellBased => (30, 40),
            SpaceKind::Nb201 => (10, 100),
        };
        SearchParams {
            space,
            generations,
            population,
            weights: ObjectiveWeights::default(),
            seed: 0,
            macro_cfg: MacroConfig::for_space(space),
            beta: 0.0,
            max_attempts_per_slot: EarlyExitConfig::DEFAULT_MAX_ATTEMPTS,
            tournament_size: 10,
            mutation_prob: 0.1,
            crossover_keep_prob: 0.5,
            k_final: 4,
            strict_offspring_filter: false,
            failure_policy: FailurePolicy::Abort,
            epochs: 1,
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let mut problems = Vec::new();
        if self.generations < 1 {
            problems.push("generations must be >= 1".to_string());
        }
        if self.population < 1 {
            problems.push("population must be >= 1".to_string());
        }
        if self.tournament_size < 1 {
            problems.push("tournament_size must be >= 1".to_string());
        }
        if self.k_final < 1 {
            problems.push("k_final must be >= 1".to_string());
        }
        if !(0.0..=1.0).contains(&self.mutation_prob) {
            problems.push(format!("mutation_prob {} not in [0, 1]", self.mutation_prob));
        }
        if !(0.0..=1.0).contains(&self.crossover_keep_prob) {
            problems.push(format!(
                "crossover_keep_prob {} not in [0, 1]",
                self.crossover_keep_prob
            ));
        }
        if self.beta < 0.0 || !self.beta.is_finite() {
            problems.push(format!("beta {} must be a non-negative finite value", self.beta));
        }
        if self.max_attempts_per_slot < 1 {
            problems.push("max_attempts_per_slot must be >= 1".to_string());
        }
        if let Err(e) = self.macro_cfg.validate() {
            problems.push(e.to_string());
        }
        if let Err(e) = ObjectiveWeights::new(self.weights.error, self.weights.flops, self.weights.params) {
            problems.push(e.to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(EngineError::InvalidParams(problems.join("; ")))
        }
    }

    fn early_exit_config(&self) -> EarlyExitConfig {
        EarlyExitConfig {
            beta: self.beta,
            max_attempts_per_slot: self.max_attempts_per_slot,
            macro_cfg: self.macro_cfg,
        }
    }
}

/// One population member as logged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberRecord {
    pub genotype: String,
    pub error: f64,
    pub flops_m: f64,
    pub params_m: f64,
}

/// Per-generation log entry; one JSON object per line in the run log.
/// `front0` is the archive Pareto front (every individual evaluated so
/// far), `hv` its nadir-normalized hypervolume, `hv_raw` the unnormalized
/// value, `members` the combined population the generation evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub front0: Vec<String>,
    pub front0_objectives: Vec<[f64; 3]>,
    pub hv: f64,
    pub hv_raw: f64,
    pub best_error: f64,
    pub mean_params: f64,
    pub evals_used: u64,
    pub cost_units: f64,
    pub members: Vec<MemberRecord>,
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid search parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Eepi(#[from] EepiError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
    #[error("evaluation failed for `{genotype}`: {source}")]
    Evaluation { genotype: String, source: EvalError },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("run-log sink error: {0}")]
    Sink(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy)]
struct CachedEval {
    error: f64,
    params_m: Option<f64>,
    flops_m: Option<f64>,
}

/// Generational state machine. Construct with [`Engine::new`] (which runs
/// the early-exit initialisation for `P_1` and `Q_1`), then call
/// [`Engine::step`] once per generation or [`Engine::run`] for the whole
/// loop.
pub struct Engine {
    params: SearchParams,
    population: Population,
    offspring: Population,
    archive: Vec<Individual>,
    archive_keys: HashSet<String>,
    cache: HashMap<String, CachedEval>,
    nadir: Option<ReferencePoint>,
    generation: usize,
    evals_used: u64,
    next_request_id: u64,
}

impl Engine {
    pub fn new(params: SearchParams) -> Result<Engine, EngineError> {
        params.validate()?;
        let cfg = params.early_exit_config();
        let population =
            initialize_population(params.population, &cfg, params.space, params.seed, stream::INIT_P)?;
        let offspring =
            initialize_population(params.population, &cfg, params.space, params.seed, stream::INIT_Q)?;
        Ok(Engine {
            params,
            population,
            offspring,
            archive: Vec::new(),
            archive_keys: HashSet::new(),
            cache: HashMap::new(),
            nadir: None,
            generation: 1,
            evals_used: 0,
            next_request_id: 0,
        })
    }

    pub fn params(&self) -> &SearchParams {
        &self.params
    }

    /// Parent population of the upcoming generation.
    pub fn population(&self) -> &Population {
        &self.population
    }

    pub fn nadir(&self) -> Option<&ReferencePoint> {
        self.nadir.as_ref()
    }

    pub fn evals_used(&self) -> u64 {
        self.evals_used
    }

    /// Archive Pareto front: non-dominated subset of everything evaluated.
    pub fn archive_front(&self) -> &[Individual] {
        &self.archive
    }

    /// Process one generation and return its record.
    pub fn step<E: Evaluator + ?Sized>(
        &mut self,
        evaluator: &mut E,
    ) -> Result<GenerationRecord, EngineError> {
        let generation = self.generation;
        let mut combined = std::mem::take(&mut self.population.members);
        combined.extend(std::mem::take(&mut self.offspring.members));

        let generation_cost = self.evaluate_pending(&mut combined, evaluator)?;

        let objectives: Vec<ObjectiveVector> = combined
            .iter()
            .map(|m| m.objectives.expect("evaluated above"))
            .collect();

        if self.nadir.is_none() {
            self.nadir = Some(nadir_from_first_generation(&objectives)?);
        }
        let nadir = self.nadir.expect("set above");

        self.update_archive(&combined);

        // rank and crowd the combined population
        let fronts = non_dominated_sort(&objectives);
        for (rank, front) in fronts.iter().enumerate() {
            let front_objs: Vec<ObjectiveVector> = front.iter().map(|&i| objectives[i]).collect();
            let distances = crowding_distance(&front_objs, &self.params.weights);
            for (&i, &d) in front.iter().zip(distances.iter()) {
                combined[i].rank = rank;
                combined[i].crowding = d;
            }
        }

        // fill the next parents front by front, truncating the last
        // admitted front by crowding distance
        let n = self.params.population;
        let mut chosen: Vec<usize> = Vec::with_capacity(n);
        for front in &fronts {
            if chosen.len() + front.len() <= n {
                chosen.extend(front.iter().copied());
            } else {
                let mut rest: Vec<usize> = front.clone();
                rest.sort_by(|&a, &b| {
                    combined[b]
                        .crowding
                        .partial_cmp(&combined[a].crowding)
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then(a.cmp(&b))
                });
                rest.truncate(n - chosen.len());
                chosen.extend(rest);
            }
            if chosen.len() >= n {
                break;
            }
        }
        debug_assert_eq!(chosen.len(), n.min(combined.len()));

        let record = self.build_record(generation, &combined, generation_cost, &nadir);

        let mut survivors: Vec<Individual> = Vec::with_capacity(chosen.len());
        let mut taken: Vec<Option<Individual>> = combined.into_iter().map(Some).collect();
        for &i in &chosen {
            survivors.push(taken[i].take().expect("each index chosen once"));
        }

        let offspring = self.make_offspring(&survivors, generation as u64)?;

        self.population = Population { members: survivors, generation: generation + 1 };
        self.offspring = Population { members: offspring, generation: generation + 1 };
        self.generation = generation + 1;
        Ok(record)
    }

    /// Run the configured number of generations, handing each record to
    /// `sink` as it is produced.
    pub fn run<E: Evaluator + ?Sized>(
        &mut self,
        evaluator: &mut E,
        mut sink: impl FnMut(&GenerationRecord) -> std::io::Result<()>,
    ) -> Result<Vec<GenerationRecord>, EngineError> {
        let mut records = Vec::with_capacity(self.params.generations);
        for _ in 0..self.params.generations {
            let record = self.step(evaluator)?;
            sink(&record)?;
            records.push(record);
        }
        Ok(records)
    }

    /// Pareto front of the final parent population, in member order.
    pub fn final_front(&self) -> Vec<&Individual> {
        let objectives: Vec<ObjectiveVector> = self
            .population
            .members
            .iter()
            .filter_map(|m| m.objectives)
            .collect();
        if objectives.len() != self.population.members.len() {
            return Vec::new();
        }
        pareto_front(&objectives)
            .into_iter()
            .map(|i| &self.population.members[i])
            .collect()
    }

    /// The run's reported models: `k_final` members of the final front at
    /// equal error spacing.
    pub fn select_final(&self) -> Vec<Individual> {
        let front: Vec<Individual> = self.final_front().into_iter().cloned().collect();
        select_k_pareto(&front, self.params.k_final, &self.params.weights)
            .into_iter()
            .map(|i| front[i].clone())
            .collect()
    }

    fn evaluate_pending<E: Evaluator + ?Sized>(
        &mut self,
        combined: &mut [Individual],
        evaluator: &mut E,
    ) -> Result<f64, EngineError> {
        let mut requests = Vec::new();
        let mut queued: HashSet<String> = HashSet::new();
        for member in combined.iter().filter(|m| m.objectives.is_none()) {
            if self.cache.contains_key(&member.key) || !queued.insert(member.key.clone()) {
                continue;
            }
            requests.push(EvaluationRequest {
                id: self.next_request_id,
                genotype: member.key.clone(),
                epochs: self.params.epochs,
            });
            self.next_request_id += 1;
        }

        let mut generation_cost = 0.0;
        if !requests.is_empty() {
            let results = evaluator.evaluate_batch(&requests);
            debug_assert_eq!(results.len(), requests.len());
            for (request, result) in requests.iter().zip(results) {
                match result {
                    Ok(r) => {
                        self.evals_used += 1;
                        generation_cost += r.cost_units;
                        self.cache.insert(
                            request.genotype.clone(),
                            CachedEval { error: r.error, params_m: r.params_m, flops_m: r.flops_m },
                        );
                    }
                    Err(e) => match self.params.failure_policy {
                        FailurePolicy::Abort => {
                            return Err(EngineError::Evaluation {
                                genotype: request.genotype.clone(),
                                source: e,
                            })
                        }
                        FailurePolicy::WorstCase => {
                            log::warn!(
                                "evaluator failed on {}; assigning worst-case objectives: {e}",
                                request.genotype
                            );
                            self.evals_used += 1;
                            self.cache.insert(
                                request.genotype.clone(),
                                CachedEval { error: 1.0, params_m: None, flops_m: None },
                            );
                        }
                    },
                }
            }
        }

        for member in combined.iter_mut().filter(|m| m.objectives.is_none()) {
            let cached = self.cache.get(&member.key).expect("evaluated or cached above");
            member.objectives = Some(ObjectiveVector::new(
                cached.error,
                cached.flops_m.unwrap_or(member.measured_flops),
                cached.params_m.unwrap_or(member.measured_params),
            )?);
        }
        Ok(generation_cost)
    }

    fn update_archive(&mut self, combined: &[Individual]) {
        for member in combined {
            if self.archive_keys.insert(member.key.clone()) {
                self.archive.push(member.clone());
            }
        }
        let objectives: Vec<ObjectiveVector> =
            self.archive.iter().map(|m| m.objectives.expect("archive is evaluated")).collect();
        let keep = pareto_front(&objectives);
        let mut keep_iter = keep.into_iter().peekable();
        let mut index = 0;
        self.archive.retain(|_| {
            let keep_this = keep_iter.peek() == Some(&index);
            if keep_this {
                keep_iter.next();
            }
            index += 1;
            keep_this
        });
        self.archive_keys = self.archive.iter().map(|m| m.key.clone()).collect();
    }

    fn build_record(
        &self,
        generation: usize,
        combined: &[Individual],
        generation_cost: f64,
        nadir: &ReferencePoint,
    ) -> GenerationRecord {
        let front_objectives: Vec<ObjectiveVector> =
            self.archive.iter().map(|m| m.objectives.expect("archive is evaluated")).collect();
        let hv = normalized_hypervolume(&front_objectives, nadir);
        let hv_raw = hypervolume3(&front_objectives, nadir);
        let best_error = front_objectives
            .iter()
            .map(|o| o.error)
            .fold(f64::INFINITY, f64::min);
        let mean_params = combined
            .iter()
            .map(|m| m.objectives.expect("evaluated").params)
            .sum::<f64>()
            / combined.len() as f64;
        GenerationRecord {
            generation,
            front0: self.archive.iter().map(|m| m.key.clone()).collect(),
            front0_objectives: front_objectives.iter().map(|o| o.as_array()).collect(),
            hv,
            hv_raw,
            best_error,
            mean_params,
            evals_used: self.evals_used,
            cost_units: generation_cost,
            members: combined
                .iter()
                .map(|m| {
                    let o = m.objectives.expect("evaluated");
                    MemberRecord {
                        genotype: m.key.clone(),
                        error: o.error,
                        flops_m: o.flops,
                        params_m: o.params,
                    }
                })
                .collect(),
        }
    }

    fn make_offspring(
        &self,
        survivors: &[Individual],
        generation: u64,
    ) -> Result<Vec<Individual>, EngineError> {
        let n = self.params.population;
        let crossover_count = n / 2;
        let filter_active = self.params.strict_offspring_filter && self.params.beta > 0.0;
        let mut offspring = Vec::with_capacity(n);

        for j in 0..n {
            let (purpose, by_crossover) = if j < crossover_count {
                (stream::CROSSOVER, true)
            } else {
                (stream::MUTATION, false)
            };
            let mut rng = derive_rng(self.params.seed, purpose, generation, j as u64);
            let mut min_params_seen = f64::INFINITY;
            let mut accepted = None;
            for _ in 0..self.params.max_attempts_per_slot {
                let genotype = if by_crossover {
                    let a = tournament_select(survivors, &mut rng, self.params.tournament_size);
                    let b = tournament_select(survivors, &mut rng, self.params.tournament_size);
                    crossover(
                        &survivors[a].genotype,
                        &survivors[b].genotype,
                        &mut rng,
                        self.params.crossover_keep_prob,
                    )?
                } else {
                    let winner = tournament_select(survivors, &mut rng, self.params.tournament_size);
                    mutate(&survivors[winner].genotype, &mut rng, self.params.mutation_prob)
                };
                let candidate = Individual::from_genotype(genotype, &self.params.macro_cfg)?;
                min_params_seen = min_params_seen.min(candidate.measured_params);
                if !filter_active || candidate.measured_params <= self.params.beta {
                    accepted = Some(candidate);
                    break;
                }
            }
            match accepted {
                Some(mut candidate) => {
                    // survivors carry objectives from earlier generations;
                    // a cloned genotype may already be known to the cache
                    if let Some(cached) = self.cache.get(&candidate.key) {
                        candidate.objectives = Some(ObjectiveVector::new(
                            cached.error,
                            cached.flops_m.unwrap_or(candidate.measured_flops),
                            cached.params_m.unwrap_or(candidate.measured_params),
                        )?);
                    }
                    offspring.push(candidate);
                }
                None => {
                    return Err(EngineError::Eepi(EepiError::BudgetInfeasible {
                        beta: self.params.beta,
                        attempts: self.params.max_attempts_per_slot,
                        min_params_seen,
                    }))
                }
            }
        }
        Ok(offspring)
    }
}
