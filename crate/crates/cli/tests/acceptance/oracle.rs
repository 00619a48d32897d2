//! Independent oracles the acceptance suite checks the engine against.
//! These deliberately do not reuse the library's computation paths: the
//! cost oracle enumerates every weight tensor of the stacked network by
//! hand, the hypervolume oracle is Monte-Carlo, and the sorting oracle is
//! the quadratic dominance filter.

use eenas_core::cost_model::MacroConfig;
use eenas_core::evolution::{dominates, ObjectiveVector};
use eenas_core::search_space::{Genotype, SpaceKind};
use rand::Rng;

/// One named weight tensor (or weightless layer) of the network.
struct Tensor {
    params: u64,
    macs: u64,
}

fn full_conv(in_ch: u64, out_ch: u64, kernel: u64, spatial: u64) -> Tensor {
    let weights = in_ch * out_ch * kernel * kernel;
    Tensor { params: weights, macs: weights * spatial * spatial }
}

fn depthwise_conv(channels: u64, kernel: u64, spatial: u64) -> Tensor {
    let weights = channels * kernel * kernel;
    Tensor { params: weights, macs: weights * spatial * spatial }
}

fn batch_norm(channels: u64) -> Tensor {
    Tensor { params: 2 * channels, macs: 0 }
}

fn pooling(channels: u64, kernel: u64, spatial: u64) -> Tensor {
    Tensor { params: 0, macs: kernel * kernel * channels * spatial * spatial }
}

fn classifier(in_ch: u64, classes: u64) -> Tensor {
    Tensor { params: in_ch * classes + classes, macs: in_ch * classes }
}

fn cell_op_tensors(op_id: u8, c: u64, t: u64, s: u64, out: &mut Vec<Tensor>) {
    match op_id {
        0 | 1 => out.push(pooling(c, 3, s)),
        2 | 4 => {
            out.push(depthwise_conv(c, 3, s));
            out.push(full_conv(c, c, 1, s));
            out.push(batch_norm(c));
        }
        3 | 5 => {
            out.push(depthwise_conv(c, 5, s));
            out.push(full_conv(c, c, 1, s));
            out.push(batch_norm(c));
        }
        6 | 7 => {
            let kernel = if op_id == 6 { 3 } else { 5 };
            out.push(full_conv(c, t * c, 1, s));
            out.push(batch_norm(t * c));
            out.push(depthwise_conv(t * c, kernel, s));
            out.push(batch_norm(t * c));
            out.push(full_conv(t * c, c, 1, s));
            out.push(batch_norm(c));
        }
        8 => {}
        _ => panic!("op id {op_id} out of range"),
    }
}

fn nb201_op_tensors(op_id: u8, c: u64, s: u64, out: &mut Vec<Tensor>) {
    match op_id {
        0 | 1 => {}
        2 => {
            out.push(full_conv(c, c, 1, s));
            out.push(batch_norm(c));
        }
        3 => {
            out.push(full_conv(c, c, 3, s));
            out.push(batch_norm(c));
        }
        4 => out.push(pooling(c, 3, s)),
        _ => panic!("nb201 op id {op_id} out of range"),
    }
}

/// Enumerate every weight tensor of the stacked network and sum sizes.
/// Returns exact `(params, macs)` tallies.
pub fn cost_oracle(genotype: &Genotype, macro_cfg: &MacroConfig) -> (u64, u64) {
    let mut tensors: Vec<Tensor> = Vec::new();
    let c0 = macro_cfg.init_channels;
    let reductions = [macro_cfg.total_cells / 3, 2 * macro_cfg.total_cells / 3];

    tensors.push(full_conv(3, c0, 3, macro_cfg.input_resolution));
    tensors.push(batch_norm(c0));

    match genotype {
        Genotype::CellBased { normal, reduction } => {
            let t = macro_cfg.inv_res_expansion;
            let mut spatial = macro_cfg.input_resolution;
            let mut working = c0;
            let mut input_a = c0; // two cells back
            let mut input_b = c0; // previous cell
            for cell_index in 0..macro_cfg.total_cells {
                let is_reduction = reductions.contains(&cell_index);
                if is_reduction {
                    working *= 2;
                    spatial /= 2;
                }
                tensors.push(full_conv(input_a, working, 1, spatial));
                tensors.push(batch_norm(working));
                tensors.push(full_conv(input_b, working, 1, spatial));
                tensors.push(batch_norm(working));
                let cell = if is_reduction { reduction } else { normal };
                for gene in &cell.genes {
                    cell_op_tensors(gene.op, working, t, spatial, &mut tensors);
                }
                input_a = input_b;
                input_b = 4 * working;
            }
            tensors.push(classifier(input_b, macro_cfg.num_classes));
        }
        Genotype::Nb201 { ops } => {
            let mut spatial = macro_cfg.input_resolution;
            let mut channels = c0;
            for cell_index in 0..macro_cfg.total_cells {
                if reductions.contains(&cell_index) {
                    spatial /= 2;
                    tensors.push(full_conv(channels, 2 * channels, 1, spatial));
                    tensors.push(batch_norm(2 * channels));
                    channels *= 2;
                }
                for &op in ops {
                    nb201_op_tensors(op, channels, spatial, &mut tensors);
                }
            }
            tensors.push(classifier(channels, macro_cfg.num_classes));
        }
    }

    tensors
        .iter()
        .fold((0, 0), |(p, m), t| (p + t.params, m + t.macs))
}

/// Monte-Carlo hypervolume: fraction of uniform samples in the reference
/// box dominated by some point, scaled by the box volume.
pub fn mc_hypervolume<R: Rng>(
    points: &[[f64; 3]],
    reference: &[f64; 3],
    samples: usize,
    rng: &mut R,
) -> f64 {
    let volume: f64 = reference.iter().product();
    let mut hits = 0usize;
    for _ in 0..samples {
        let x = rng.gen_range(0.0..reference[0]);
        let y = rng.gen_range(0.0..reference[1]);
        let z = rng.gen_range(0.0..reference[2]);
        if points.iter().any(|p| p[0] <= x && p[1] <= y && p[2] <= z) {
            hits += 1;
        }
    }
    volume * hits as f64 / samples as f64
}

/// Quadratic dominance filter repeated front by front.
pub fn brute_force_fronts(objectives: &[ObjectiveVector]) -> Vec<Vec<usize>> {
    let mut remaining: Vec<usize> = (0..objectives.len()).collect();
    let mut fronts = Vec::new();
    while !remaining.is_empty() {
        let front: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&i| {
                !remaining
                    .iter()
                    .any(|&j| j != i && dominates(&objectives[j], &objectives[i]))
            })
            .collect();
        remaining.retain(|i| !front.contains(i));
        fronts.push(front);
    }
    fronts
}

/// The parameter floor of a search space under a macro config, via the
/// oracle itself.
pub fn oracle_floor_params_m(space: SpaceKind, macro_cfg: &MacroConfig) -> f64 {
    cost_oracle(&Genotype::floor_of(space), macro_cfg).0 as f64 / 1e6
}
