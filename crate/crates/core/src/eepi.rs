//! Early-exit population initialisation.
//!
//! The first generation is rejection-sampled: each slot draws random
//! genotypes until the analytic parameter count `alpha` satisfies
//! `alpha <= beta` (millions). `beta = 0` is the disabled sentinel — every
//! sample passes, which reproduces the unconstrained variant. Later
//! generations are produced by evolution and are not refiltered unless the
//! strict offspring mode is enabled on the engine.
//!
//! Slots draw from independent derived streams, so the population is
//! deterministic by slot index regardless of fill order.

use crate::cost_model::MacroConfig;
use crate::evolution::{Individual, Population};
use crate::rng::derive_rng;
use crate::search_space::{random_genotype, SpaceKind};
use thiserror::Error;

/// Budget and sampling limits for the first generation.
#[derive(Debug, Clone, Copy)]
pub struct EarlyExitConfig {
    /// Parameter budget in millions; `0` disables the filter.
    pub beta: f64,
    /// Rejection attempts per population slot before reporting the budget
    /// infeasible.
    pub max_attempts_per_slot: usize,
    /// Macro configuration the budget is measured against.
    pub macro_cfg: MacroConfig,
}

impl EarlyExitConfig {
    pub const DEFAULT_MAX_ATTEMPTS: usize = 10_000;

    pub fn new(beta: f64, macro_cfg: MacroConfig) -> EarlyExitConfig {
        EarlyExitConfig { beta, max_attempts_per_slot: Self::DEFAULT_MAX_ATTEMPTS, macro_cfg }
    }

    pub fn validate(&self) -> Result<(), EepiError> {
        if !self.beta.is_finite() || self.beta < 0.0 {
            return Err(EepiError::InvalidBeta { beta: self.beta });
        }
        if self.max_attempts_per_slot < 1 {
            return Err(EepiError::InvalidAttempts { attempts: self.max_attempts_per_slot });
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum EepiError {
    #[error("beta must be a non-negative finite number of millions, got {beta}")]
    InvalidBeta { beta: f64 },
    #[error("max_attempts_per_slot must be >= 1, got {attempts}")]
    InvalidAttempts { attempts: usize },
    #[error(
        "budget infeasible: no genotype with params <= {beta} M found in {attempts} attempts \
         (minimum seen: {min_params_seen} M); beta is below the space's parameter floor"
    )]
    BudgetInfeasible { beta: f64, attempts: usize, min_params_seen: f64 },
    #[error(transparent)]
    Cost(#[from] crate::cost_model::CostError),
}

/// The early-exit acceptance test: keep a model iff its parameter count
/// does not exceed the budget. `beta = 0` accepts everything.
pub fn early_exit(alpha: f64, beta: f64) -> bool {
    beta == 0.0 || alpha <= beta
}

/// Fill a generation-1 population of `n` members whose analytic parameter
/// counts all pass [`early_exit`]. `stream` namespaces the derived RNG so
/// `P_1` and `Q_1` draw from disjoint slot streams. Members carry their
/// analytic params/FLOPs; the error objective stays unevaluated.
pub fn initialize_population(
    n: usize,
    cfg: &EarlyExitConfig,
    space: SpaceKind,
    seed: u64,
    stream: u64,
) -> Result<Population, EepiError> {
    cfg.validate()?;
    let mut members = Vec::with_capacity(n);
    for slot in 0..n {
        let mut rng = derive_rng(seed, stream, 0, slot as u64);
        let mut min_params_seen = f64::INFINITY;
        let mut accepted = None;
        for _ in 0..cfg.max_attempts_per_slot {
            let genotype = random_genotype(&mut rng, space);
            let individual = Individual::from_genotype(genotype, &cfg.macro_cfg)?;
            min_params_seen = min_params_seen.min(individual.measured_params);
            if early_exit(individual.measured_params, cfg.beta) {
                accepted = Some(individual);
                break;
            }
        }
        match accepted {
            Some(individual) => members.push(individual),
            None => {
                return Err(EepiError::BudgetInfeasible {
                    beta: cfg.beta,
                    attempts: cfg.max_attempts_per_slot,
                    min_params_seen,
                })
            }
        }
    }
    Ok(Population { members, generation: 1 })
}
