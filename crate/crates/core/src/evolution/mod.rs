//! NSGA-II-style multi-objective machinery.
//!
//! Three objectives are minimised jointly: validation error, FLOPs, and
//! parameter count (Deb's fast non-dominated sorting with a weighted
//! crowding distance; with equal weights the selection degenerates to
//! standard NSGA-II). All tie-breaking is deterministic — stable sorts
//! plus index order — so a seeded run is bit-reproducible.

pub mod engine;

use crate::cost_model::{architecture_cost, CostError, MacroConfig};
use crate::search_space::{
    block_of_position, random_gene, Gene, Genotype, NB201_OP_COUNT, NB201_SLOTS,
};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One evaluated point in objective space. All components are minimised;
/// `error` is a fraction, `flops` and `params` are in millions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    pub error: f64,
    pub flops: f64,
    pub params: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum EvolutionError {
    #[error("objective {name} = {value} outside its valid range")]
    ObjectiveOutOfRange { name: &'static str, value: f64 },
    #[error("objective weights sum to {sum}, expected 1")]
    WeightsDoNotSumToOne { sum: f64 },
    #[error("weight {name} = {value} is negative")]
    NegativeWeight { name: &'static str, value: f64 },
    #[error("genotypes come from different search spaces")]
    SpaceMismatch,
    #[error("population member {index} has no evaluated objectives")]
    Unevaluated { index: usize },
    #[error("gene position {position} out of range for this genotype")]
    PositionOutOfRange { position: usize },
    #[error(transparent)]
    Cost(#[from] CostError),
}

impl ObjectiveVector {
    pub fn new(error: f64, flops: f64, params: f64) -> Result<ObjectiveVector, EvolutionError> {
        let checks = [
            ("error", error, 1.0),
            ("flops", flops, f64::INFINITY),
            ("params", params, f64::INFINITY),
        ];
        for (name, value, max) in checks {
            if !value.is_finite() || value < 0.0 || value > max {
                return Err(EvolutionError::ObjectiveOutOfRange { name, value });
            }
        }
        Ok(ObjectiveVector { error, flops, params })
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.error, self.flops, self.params]
    }
}

/// Per-objective weights; must be non-negative and sum to 1 (within 1e-9).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveWeights {
    pub error: f64,
    pub flops: f64,
    pub params: f64,
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        ObjectiveWeights { error: 1.0 / 3.0, flops: 1.0 / 3.0, params: 1.0 / 3.0 }
    }
}

impl ObjectiveWeights {
    pub fn new(error: f64, flops: f64, params: f64) -> Result<ObjectiveWeights, EvolutionError> {
        for (name, value) in [("error", error), ("flops", flops), ("params", params)] {
            if value < 0.0 || !value.is_finite() {
                return Err(EvolutionError::NegativeWeight { name, value });
            }
        }
        let sum = error + flops + params;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(EvolutionError::WeightsDoNotSumToOne { sum });
        }
        Ok(ObjectiveWeights { error, flops, params })
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.error, self.flops, self.params]
    }
}

/// One genotype with its measured analytic costs and, once evaluated, its
/// objective vector and NSGA-II bookkeeping.
#[derive(Debug, Clone)]
pub struct Individual {
    pub genotype: Genotype,
    /// Canonical serialized genotype; keys evaluation caches.
    pub key: String,
    /// Analytic cost-model parameters in millions.
    pub measured_params: f64,
    /// Analytic cost-model MACs in millions.
    pub measured_flops: f64,
    pub objectives: Option<ObjectiveVector>,
    pub rank: usize,
    pub crowding: f64,
}

impl Individual {
    /// Build an individual, pricing the genotype under the macro config.
    pub fn from_genotype(genotype: Genotype, macro_cfg: &MacroConfig) -> Result<Individual, CostError> {
        let report = architecture_cost(&genotype, macro_cfg)?;
        let key = genotype.serialize();
        Ok(Individual {
            genotype,
            key,
            measured_params: report.params_m(),
            measured_flops: report.flops_m(),
            objectives: None,
            rank: 0,
            crowding: 0.0,
        })
    }
}

/// A generation's members. `generation` starts at 1.
#[derive(Debug, Clone)]
pub struct Population {
    pub members: Vec<Individual>,
    pub generation: usize,
}

/// Pareto dominance under minimisation: `a` is no worse everywhere and
/// strictly better somewhere.
pub fn dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> bool {
    let a = a.as_array();
    let b = b.as_array();
    let mut strictly_better = false;
    for (x, y) in a.iter().zip(b.iter()) {
        if x > y {
            return false;
        }
        if x < y {
            strictly_better = true;
        }
    }
    strictly_better
}

/// Deb's fast non-dominated sort. Returns fronts as index lists; front 0
/// is the maximal non-dominated set. Every index appears exactly once.
pub fn non_dominated_sort(objectives: &[ObjectiveVector]) -> Vec<Vec<usize>> {
    let n = objectives.len();
    if n == 0 {
        return Vec::new();
    }
    let mut dominated_by: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut domination_count = vec![0usize; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if dominates(&objectives[i], &objectives[j]) {
                dominated_by[i].push(j);
                domination_count[j] += 1;
            } else if dominates(&objectives[j], &objectives[i]) {
                dominated_by[j].push(i);
                domination_count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| domination_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominated_by[i] {
                domination_count[j] -= 1;
                if domination_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(std::mem::replace(&mut current, next));
    }
    fronts
}

/// Weighted crowding distance of one front. Boundary members of each
/// non-degenerate objective get `+inf`; interior members accumulate
/// `w_m * gap / range` per objective; a degenerate objective
/// (`max == min`) contributes nothing.
pub fn crowding_distance(front: &[ObjectiveVector], weights: &ObjectiveWeights) -> Vec<f64> {
    let n = front.len();
    let mut distance = vec![0.0f64; n];
    if n == 0 {
        return distance;
    }
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    for (m, &weight) in weights.as_array().iter().enumerate() {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            front[a].as_array()[m]
                .partial_cmp(&front[b].as_array()[m])
                .unwrap()
                .then(a.cmp(&b))
        });
        let lo = front[order[0]].as_array()[m];
        let hi = front[order[n - 1]].as_array()[m];
        let range = hi - lo;
        if range <= 0.0 {
            continue;
        }
        distance[order[0]] = f64::INFINITY;
        distance[order[n - 1]] = f64::INFINITY;
        for k in 1..n - 1 {
            if distance[order[k]].is_finite() {
                let gap = front[order[k + 1]].as_array()[m] - front[order[k - 1]].as_array()[m];
                distance[order[k]] += weight * gap / range;
            }
        }
    }
    distance
}

/// Binary comparison used everywhere a rank/crowding winner is needed:
/// lower rank first, then larger crowding, then lower index.
pub fn selection_order(a: (usize, f64, usize), b: (usize, f64, usize)) -> std::cmp::Ordering {
    a.0.cmp(&b.0)
        .then_with(|| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal))
        .then_with(|| a.2.cmp(&b.2))
}

/// Tournament selection with replacement over an evaluated, ranked
/// population. Returns the winner's index.
pub fn tournament_select<R: Rng + ?Sized>(
    population: &[Individual],
    rng: &mut R,
    tournament_size: usize,
) -> usize {
    debug_assert!(!population.is_empty());
    let mut best: Option<usize> = None;
    for _ in 0..tournament_size.max(1) {
        let candidate = rng.gen_range(0..population.len());
        best = Some(match best {
            None => candidate,
            Some(current) => {
                let c = (population[candidate].rank, population[candidate].crowding, candidate);
                let b = (population[current].rank, population[current].crowding, current);
                if selection_order(c, b) == std::cmp::Ordering::Less {
                    candidate
                } else {
                    current
                }
            }
        });
    }
    best.unwrap()
}

/// Uniform crossover with an explicit pick source. `pick()` is consulted
/// once per gene component — operation then index for each cell-based
/// position (normal cell first), once per NB201 slot — and `true` takes
/// the component from the first parent.
pub fn crossover_with(
    p1: &Genotype,
    p2: &Genotype,
    mut pick: impl FnMut() -> bool,
) -> Result<Genotype, EvolutionError> {
    match (p1, p2) {
        (
            Genotype::CellBased { normal: n1, reduction: r1 },
            Genotype::CellBased { normal: n2, reduction: r2 },
        ) => {
            let mut cross_cell = |a: &crate::search_space::Cell, b: &crate::search_space::Cell| {
                let mut genes = a.genes;
                for (position, gene) in genes.iter_mut().enumerate() {
                    let op = if pick() { a.genes[position].op } else { b.genes[position].op };
                    let index = if pick() { a.genes[position].index } else { b.genes[position].index };
                    *gene = Gene::new(op, index);
                }
                crate::search_space::Cell::new(genes)
            };
            let normal = cross_cell(n1, n2);
            let reduction = cross_cell(r1, r2);
            Ok(Genotype::CellBased { normal, reduction })
        }
        (Genotype::Nb201 { ops: a }, Genotype::Nb201 { ops: b }) => {
            let mut ops = [0u8; NB201_SLOTS];
            for (slot, op) in ops.iter_mut().enumerate() {
                *op = if pick() { a[slot] } else { b[slot] };
            }
            Ok(Genotype::Nb201 { ops })
        }
        _ => Err(EvolutionError::SpaceMismatch),
    }
}

/// Uniform crossover: each gene component independently comes from the
/// first parent with probability `keep_prob`.
pub fn crossover<R: Rng + ?Sized>(
    p1: &Genotype,
    p2: &Genotype,
    rng: &mut R,
    keep_prob: f64,
) -> Result<Genotype, EvolutionError> {
    crossover_with(p1, p2, || rng.gen_bool(keep_prob))
}

/// Replace the gene at a flat position with a specific new gene.
pub fn mutate_at(g: &Genotype, position: usize, gene: Gene) -> Result<Genotype, EvolutionError> {
    g.with_gene_at(position, gene)
        .ok_or(EvolutionError::PositionOutOfRange { position })
}

/// Single-site mutation: with probability `mutation_prob` pick one gene
/// position uniformly and replace it with a freshly sampled valid pair;
/// otherwise return the genotype unchanged.
pub fn mutate<R: Rng + ?Sized>(g: &Genotype, rng: &mut R, mutation_prob: f64) -> Genotype {
    if mutation_prob <= 0.0 || !rng.gen_bool(mutation_prob.min(1.0)) {
        return g.clone();
    }
    let position = rng.gen_range(0..g.position_count());
    let gene = match g {
        Genotype::CellBased { .. } => {
            random_gene(rng, block_of_position(position % crate::search_space::GENES_PER_CELL))
        }
        Genotype::Nb201 { .. } => Gene::new(rng.gen_range(0..NB201_OP_COUNT as u8), 0),
    };
    mutate_at(g, position, gene).expect("position drawn in range")
}

/// Pick `k` members of a front at (approximately) equal spacing along the
/// error axis, both extremes included. `k = 1` returns the member with the
/// smallest weighted sum of range-normalised objectives. `k >= |front|`
/// returns the whole front. Returns indices into `front`.
pub fn select_k_pareto(
    front: &[Individual],
    k: usize,
    weights: &ObjectiveWeights,
) -> Vec<usize> {
    if front.is_empty() || k == 0 {
        return Vec::new();
    }
    let objective = |i: usize| front[i].objectives.expect("front members are evaluated");
    if k >= front.len() {
        return (0..front.len()).collect();
    }
    let mut by_error: Vec<usize> = (0..front.len()).collect();
    by_error.sort_by(|&a, &b| {
        objective(a)
            .error
            .partial_cmp(&objective(b).error)
            .unwrap()
            .then(a.cmp(&b))
    });
    if k == 1 {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for i in 0..front.len() {
            for (m, v) in objective(i).as_array().iter().enumerate() {
                lo[m] = lo[m].min(*v);
                hi[m] = hi[m].max(*v);
            }
        }
        let w = weights.as_array();
        let score = |i: usize| -> f64 {
            objective(i)
                .as_array()
                .iter()
                .enumerate()
                .map(|(m, v)| {
                    let range = hi[m] - lo[m];
                    if range > 0.0 {
                        w[m] * (v - lo[m]) / range
                    } else {
                        0.0
                    }
                })
                .sum()
        };
        let best = (0..front.len())
            .min_by(|&a, &b| score(a).partial_cmp(&score(b)).unwrap().then(a.cmp(&b)))
            .unwrap();
        return vec![best];
    }
    let last = front.len() - 1;
    let mut picks: Vec<usize> = (0..k)
        .map(|i| {
            let position = (i as f64 * last as f64 / (k - 1) as f64).round() as usize;
            by_error[position]
        })
        .collect();
    picks.dedup();
    picks
}
