//! Multi-objective evolutionary neural architecture search with early-exit
//! population initialisation.
//!
//! The crate is organised around a small pipeline:
//!
//! * [`search_space`] — genotype encodings (a cell-based space of 9
//!   operations and an NB201-style 6-slot vector space), random sampling,
//!   validation, and decoding into an explicit architecture graph.
//! * [`cost_model`] — analytic parameter and FLOP (multiply-accumulate)
//!   counts for a decoded architecture under a macro configuration.
//! * [`eepi`] — early-exit population initialisation: rejection-sample the
//!   first generation so every member's parameter count is at most a budget
//!   `beta` (`beta = 0` disables the filter).
//! * [`evolution`] — NSGA-II-style machinery: Pareto dominance, fast
//!   non-dominated sorting, weighted crowding distance, tournament
//!   selection, uniform crossover, single-site mutation, and the
//!   generational [`evolution::engine::Engine`].
//! * [`evaluators`] — pluggable fitness sources: a tabular benchmark, a
//!   deterministic synthetic surrogate, and a line-protocol bridge to an
//!   external trainer process pool.
//! * [`metrics`] — nadir reference points, exact hypervolume for up to
//!   three objectives, normalized hypervolume series, and CSV exports.
//!
//! Everything is deterministic given a master seed: random streams are
//! derived per (seed, purpose, generation, index) so results do not depend
//! on evaluation order or worker scheduling.

pub mod cost_model;
pub mod eepi;
pub mod evaluators;
pub mod evolution;
pub mod metrics;
pub mod rng;
pub mod search_space;

pub use cost_model::{architecture_cost, CostError, CostReport, MacroConfig};
pub use eepi::{early_exit, initialize_population, EarlyExitConfig, EepiError};
pub use evaluators::{
    EvalError, EvaluationRequest, EvaluationResult, Evaluator, SurrogateEvaluator,
    TabularBenchmark, TabularEvaluator,
};
pub use evolution::engine::{
    Engine, EngineError, FailurePolicy, GenerationRecord, MemberRecord, SearchParams,
};
pub use evolution::{
    crossover, dominates, mutate, non_dominated_sort, select_k_pareto, tournament_select,
    Individual, ObjectiveVector, ObjectiveWeights, Population,
};
pub use metrics::{hypervolume, nadir_from_first_generation, pareto_front, ReferencePoint};
pub use search_space::{
    decode, random_genotype, ArchitectureGraph, Cell, CellRole, Gene, Genotype, Operation,
    ParseError, SpaceKind,
};
