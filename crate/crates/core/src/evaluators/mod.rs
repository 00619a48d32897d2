//! Pluggable fitness sources.
//!
//! An evaluator turns a serialized genotype into an error objective, and
//! may additionally supply ground-truth FLOPs/params that override the
//! analytic cost model (tabular benchmarks ship measured costs). Three
//! sources are provided:
//!
//! * [`TabularEvaluator`] — exact lookups into a preloaded benchmark table
//!   (JSONL, one `{arch, val_error, test_error, params_m, flops_m}` object
//!   per line);
//! * [`SurrogateEvaluator`] — a deterministic closed-form stand-in for
//!   training, documented below, whose simulated cost equals the model's
//!   parameter count;
//! * [`ExternalEvaluator`] — a pool of child processes speaking
//!   newline-delimited JSON over stdin/stdout (see [`external`]).
//!
//! Every result is range-checked at the boundary; an out-of-range error
//! value is rejected before it can reach the evolution engine.

pub mod external;

pub use external::ExternalEvaluator;

use crate::cost_model::{architecture_cost, MacroConfig};
use crate::search_space::{Genotype, ParseError, SpaceKind};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use thiserror::Error;

/// One evaluation job. `id` is unique within a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationRequest {
    pub id: u64,
    /// Canonical serialized genotype.
    pub genotype: String,
    /// Training budget hint in epochs.
    pub epochs: u32,
}

/// Evaluator verdict for one genotype.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationResult {
    pub id: u64,
    /// Error fraction in `[0, 1]`.
    pub error: f64,
    /// Ground-truth params in millions, when the source knows better than
    /// the analytic model.
    pub params_m: Option<f64>,
    /// Ground-truth FLOPs in millions.
    pub flops_m: Option<f64>,
    /// Simulated or measured evaluation cost.
    pub cost_units: f64,
}

impl EvaluationResult {
    /// Boundary validation: id match and field ranges.
    pub fn validate(&self, expected_id: u64) -> Result<(), EvalError> {
        if self.id != expected_id {
            return Err(EvalError::IdMismatch { expected: expected_id, got: self.id });
        }
        if !(0.0..=1.0).contains(&self.error) || !self.error.is_finite() {
            return Err(EvalError::OutOfRange {
                field: "error",
                value: self.error,
                payload: format!("{self:?}"),
            });
        }
        for (name, value) in [("params_m", self.params_m), ("flops_m", self.flops_m)] {
            if let Some(v) = value {
                if !v.is_finite() || v < 0.0 {
                    return Err(EvalError::OutOfRange {
                        field: name,
                        value: v,
                        payload: format!("{self:?}"),
                    });
                }
            }
        }
        if !self.cost_units.is_finite() || self.cost_units < 0.0 {
            return Err(EvalError::OutOfRange {
                field: "cost_units",
                value: self.cost_units,
                payload: format!("{self:?}"),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("architecture not in benchmark: {key}")]
    NotInBenchmark { key: String },
    #[error("genotype text is invalid: {0}")]
    BadGenotype(#[from] ParseError),
    #[error("response id {got} does not match request id {expected}")]
    IdMismatch { expected: u64, got: u64 },
    #[error("{field} = {value} outside its valid range in evaluator response: {payload}")]
    OutOfRange { field: &'static str, value: f64, payload: String },
    #[error("evaluator process timed out after {timeout_ms} ms on request {id}")]
    Timeout { id: u64, timeout_ms: u64 },
    #[error("malformed evaluator response: {detail}; payload: {payload}")]
    Malformed { detail: String, payload: String },
    #[error("evaluator process exited{}", match status { Some(s) => format!(" with status {s}"), None => String::from(" unexpectedly") })]
    WorkerExited { status: Option<i32> },
    #[error("failed to start evaluator process `{command}`: {source}")]
    Spawn { command: String, source: std::io::Error },
    #[error("benchmark file error: {0}")]
    Io(#[from] std::io::Error),
    #[error("benchmark line {line} is not valid JSON: {detail}")]
    BadBenchLine { line: usize, detail: String },
    #[error(transparent)]
    Cost(#[from] crate::cost_model::CostError),
}

/// A fitness source. Implementations must be deterministic per genotype
/// (or externally accountable, for process bridges). Batch evaluation may
/// parallelise internally but must return results in request order.
pub trait Evaluator {
    fn name(&self) -> &'static str;

    fn evaluate(&mut self, request: &EvaluationRequest) -> Result<EvaluationResult, EvalError>;

    fn evaluate_batch(
        &mut self,
        requests: &[EvaluationRequest],
    ) -> Vec<Result<EvaluationResult, EvalError>> {
        requests.iter().map(|r| self.evaluate(r)).collect()
    }
}

// ---------------------------------------------------------------------------
// Deterministic surrogate
// ---------------------------------------------------------------------------

/// Closed-form surrogate: a deterministic, training-free error model.
///
/// With `z_p` the parameter count above the space's floor (millions),
/// `z_d` the distinct-operation fraction above its floor, and `w` a hash
/// of the canonical genotype in `[0, 1)`:
///
/// ```text
/// u     = (A * z_p + B * z_d) * (1 + C_NOISE * w)
/// error = LO + (HI - LO) * 2 * (1 - sigmoid(u))
/// ```
///
/// `u >= 0`, so the error lands in `(LO, HI]`, decreasing in both model
/// capacity and operation diversity. The parameter-floor genotype has
/// `u = 0` exactly and therefore scores the documented maximum `HI`.
/// Simulated evaluation cost equals the analytic parameter count.
#[derive(Debug, Clone)]
pub struct SurrogateEvaluator {
    pub macro_cfg: MacroConfig,
    /// Worker threads for batch evaluation; 1 = sequential.
    pub workers: usize,
    floor_params: HashMap<SpaceKind, f64>,
}

impl SurrogateEvaluator {
    /// Lower error bound.
    pub const LO: f64 = 0.05;
    /// Upper error bound, attained exactly at the parameter floor.
    pub const HI: f64 = 0.95;
    /// Weight of params above the floor (per million). Kept small enough
    /// that capacity keeps buying error across the whole space instead of
    /// saturating near typical budget values.
    pub const A: f64 = 0.6;
    /// Weight of operation diversity above the floor.
    pub const B: f64 = 1.2;
    /// Relative strength of the hash jitter.
    pub const C_NOISE: f64 = 0.35;

    pub fn new(macro_cfg: MacroConfig) -> SurrogateEvaluator {
        SurrogateEvaluator { macro_cfg, workers: 1, floor_params: HashMap::new() }
    }

    pub fn with_workers(mut self, workers: usize) -> SurrogateEvaluator {
        self.workers = workers.max(1);
        self
    }

    fn floor_params(&mut self, space: SpaceKind) -> Result<f64, EvalError> {
        if let Some(&cached) = self.floor_params.get(&space) {
            return Ok(cached);
        }
        let floor = architecture_cost(&Genotype::floor_of(space), &self.macro_cfg)?.params_m();
        self.floor_params.insert(space, floor);
        Ok(floor)
    }

    /// The closed-form error at a genotype.
    pub fn error_for(&mut self, genotype: &Genotype) -> Result<f64, EvalError> {
        let params = architecture_cost(genotype, &self.macro_cfg)?.params_m();
        let floor = self.floor_params(genotype.space())?;
        Ok(Self::error_from_parts(
            params,
            floor,
            genotype.distinct_op_count(),
            genotype.space().op_count(),
            hash01(&genotype.serialize()),
        ))
    }

    /// The documented formula, exposed for oracle-style recomputation.
    pub fn error_from_parts(
        params_m: f64,
        floor_params_m: f64,
        distinct_ops: usize,
        op_count: usize,
        noise: f64,
    ) -> f64 {
        let z_p = (params_m - floor_params_m).max(0.0);
        let d_floor = 1.0 / op_count as f64;
        let z_d = (distinct_ops as f64 / op_count as f64 - d_floor).max(0.0);
        let u = (Self::A * z_p + Self::B * z_d) * (1.0 + Self::C_NOISE * noise);
        let sigmoid = 1.0 / (1.0 + (-u).exp());
        Self::LO + (Self::HI - Self::LO) * 2.0 * (1.0 - sigmoid)
    }
}

/// First 8 bytes of SHA-256 mapped to `[0, 1)`. Stable across platforms.
pub fn hash01(text: &str) -> f64 {
    let digest = Sha256::digest(text.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_be_bytes(bytes) as f64 / (u64::MAX as f64 + 1.0)
}

impl Evaluator for SurrogateEvaluator {
    fn name(&self) -> &'static str {
        "surrogate"
    }

    fn evaluate(&mut self, request: &EvaluationRequest) -> Result<EvaluationResult, EvalError> {
        let genotype = Genotype::parse(&request.genotype)?;
        let report = architecture_cost(&genotype, &self.macro_cfg)?;
        let error = self.error_for(&genotype)?;
        let result = EvaluationResult {
            id: request.id,
            error,
            params_m: None,
            flops_m: None,
            cost_units: report.params_m(),
        };
        result.validate(request.id)?;
        Ok(result)
    }

    fn evaluate_batch(
        &mut self,
        requests: &[EvaluationRequest],
    ) -> Vec<Result<EvaluationResult, EvalError>> {
        if self.workers <= 1 || requests.len() < 2 {
            return requests.iter().map(|r| self.evaluate(r)).collect();
        }
        // warm the floor cache so parallel clones never race to compute it
        for space in [SpaceKind::CellBased, SpaceKind::Nb201] {
            let _ = self.floor_params(space);
        }
        let workers = self.workers.min(requests.len());
        let mut slots: Vec<Option<Result<EvaluationResult, EvalError>>> =
            (0..requests.len()).map(|_| None).collect();
        std::thread::scope(|scope| {
            let chunks = slots.chunks_mut(requests.len().div_ceil(workers));
            for (chunk_index, chunk) in chunks.enumerate() {
                let offset = chunk_index * requests.len().div_ceil(workers);
                let mut local = self.clone();
                let requests = &requests;
                scope.spawn(move || {
                    for (k, slot) in chunk.iter_mut().enumerate() {
                        *slot = Some(local.evaluate(&requests[offset + k]));
                    }
                });
            }
        });
        slots.into_iter().map(|s| s.expect("all slots filled")).collect()
    }
}

// ---------------------------------------------------------------------------
// Tabular benchmark
// ---------------------------------------------------------------------------

/// One benchmark table row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchEntry {
    pub val_error: f64,
    pub test_error: f64,
    pub params_m: f64,
    pub flops_m: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct BenchLine {
    arch: String,
    val_error: f64,
    test_error: f64,
    params_m: f64,
    flops_m: f64,
}

/// Map from canonical genotype text to measured performance.
#[derive(Debug, Clone, Default)]
pub struct TabularBenchmark {
    entries: HashMap<String, BenchEntry>,
}

impl TabularBenchmark {
    pub fn new() -> TabularBenchmark {
        TabularBenchmark::default()
    }

    /// Load a JSONL table; keys are canonicalized through parse/serialize.
    pub fn load(path: &Path) -> Result<TabularBenchmark, EvalError> {
        let file = std::fs::File::open(path)?;
        let mut bench = TabularBenchmark::new();
        for (line_no, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: BenchLine =
                serde_json::from_str(&line).map_err(|e| EvalError::BadBenchLine {
                    line: line_no + 1,
                    detail: e.to_string(),
                })?;
            let genotype = Genotype::parse(&parsed.arch)?;
            bench.insert(
                &genotype,
                BenchEntry {
                    val_error: parsed.val_error,
                    test_error: parsed.test_error,
                    params_m: parsed.params_m,
                    flops_m: parsed.flops_m,
                },
            );
        }
        Ok(bench)
    }

    pub fn insert(&mut self, genotype: &Genotype, entry: BenchEntry) {
        self.entries.insert(genotype.serialize(), entry);
    }

    pub fn get(&self, key: &str) -> Option<&BenchEntry> {
        self.entries.get(key)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Write one table line; used by the benchmark generator.
    pub fn write_line<W: Write>(
        out: &mut W,
        genotype: &Genotype,
        entry: &BenchEntry,
    ) -> std::io::Result<()> {
        let line = serde_json::to_string(&BenchLine {
            arch: genotype.serialize(),
            val_error: entry.val_error,
            test_error: entry.test_error,
            params_m: entry.params_m,
            flops_m: entry.flops_m,
        })
        .expect("bench line serializes");
        writeln!(out, "{line}")
    }
}

/// Exact benchmark lookups; queries cost nothing.
#[derive(Debug, Clone)]
pub struct TabularEvaluator {
    bench: TabularBenchmark,
}

impl TabularEvaluator {
    pub fn new(bench: TabularBenchmark) -> TabularEvaluator {
        TabularEvaluator { bench }
    }

    pub fn benchmark(&self) -> &TabularBenchmark {
        &self.bench
    }
}

impl Evaluator for TabularEvaluator {
    fn name(&self) -> &'static str {
        "tabular"
    }

    fn evaluate(&mut self, request: &EvaluationRequest) -> Result<EvaluationResult, EvalError> {
        let key = Genotype::parse(&request.genotype)?.serialize();
        let entry = self
            .bench
            .get(&key)
            .ok_or(EvalError::NotInBenchmark { key })?;
        let result = EvaluationResult {
            id: request.id,
            error: entry.val_error,
            params_m: Some(entry.params_m),
            flops_m: Some(entry.flops_m),
            cost_units: 0.0,
        };
        result.validate(request.id)?;
        Ok(result)
    }
}
