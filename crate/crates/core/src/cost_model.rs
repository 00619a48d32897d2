//! Analytic parameter and FLOP counts for decoded architectures.
//!
//! Counts are exact integer tallies of named weight tensors, reported in
//! millions. FLOPs are multiply-accumulates (MACs): each weight-bearing
//! layer contributes its parameter count excluding batch-norm times the
//! output spatial area; pooling contributes `k^2 * C * spatial^2`; skip
//! connections and batch-norm contribute nothing.
//!
//! Per-operation weight tensors, at working channel count `C` and
//! inverted-residual expansion `t`:
//!
//! * separable / dilated conv `k x k`: depthwise `C*k^2` + pointwise `C*C`
//!   + batch-norm `2C` (one application);
//! * inverted residual `k x k`: expand pointwise `C*(tC)` + depthwise
//!   `(tC)*k^2` + project pointwise `(tC)*C` + batch-norm
//!   `2(C + tC + tC)`;
//! * pooling and skip: no weights.
//!
//! The stacked network places a reduction cell at `total_cells/3` and
//! `2*total_cells/3`; working channels double and the spatial size halves
//! there. Every cell projects both inputs to its working channel count
//! with 1x1 convolutions and emits `4 * C` channels (concatenation of the
//! four block nodes). The stem is a single 3x3 full convolution from RGB,
//! the head a global pool plus linear classifier.

use crate::search_space::{Genotype, Nb201Op, Operation, SpaceKind};
use serde::Serialize;
use thiserror::Error;

/// Macro configuration of the stacked network the cost model prices.
#[derive(Debug, Clone, Copy, PartialEq, serde::Deserialize, Serialize)]
pub struct MacroConfig {
    /// Total stacked cells, normal plus reduction.
    pub total_cells: usize,
    /// Channels of the first cell (stem output).
    pub init_channels: u64,
    /// Square input resolution in pixels.
    pub input_resolution: u64,
    /// Inverted-residual expansion ratio.
    pub inv_res_expansion: u64,
    /// Classifier width.
    pub num_classes: u64,
}

impl Default for MacroConfig {
    fn default() -> Self {
        MacroConfig::for_space(SpaceKind::CellBased)
    }
}

impl MacroConfig {
    /// Search-time defaults: 8 cells at 32 channels for the cell-based
    /// space; 17 cells at 16 channels for NB201 (5 cells per stage, two
    /// reduction positions).
    pub fn for_space(space: SpaceKind) -> MacroConfig {
        match space {
            SpaceKind::CellBased => MacroConfig {
                total_cells: 8,
                init_channels: 32,
                input_resolution: 32,
                inv_res_expansion: 6,
                num_classes: 10,
            },
            SpaceKind::Nb201 => MacroConfig {
                total_cells: 17,
                init_channels: 16,
                input_resolution: 32,
                inv_res_expansion: 6,
                num_classes: 10,
            },
        }
    }

    /// Cell indices where channels double and the spatial size halves.
    pub fn reduction_positions(&self) -> [usize; 2] {
        [self.total_cells / 3, 2 * self.total_cells / 3]
    }

    pub fn validate(&self) -> Result<(), CostError> {
        if self.total_cells < 3 {
            return Err(CostError::InvalidMacro(format!(
                "total_cells must be >= 3, got {}",
                self.total_cells
            )));
        }
        if self.init_channels < 1 {
            return Err(CostError::InvalidMacro("init_channels must be >= 1".into()));
        }
        if self.input_resolution < 8 {
            return Err(CostError::InvalidMacro(format!(
                "input_resolution must be >= 8, got {}",
                self.input_resolution
            )));
        }
        if self.inv_res_expansion < 1 {
            return Err(CostError::InvalidMacro("inv_res_expansion must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CostError {
    #[error("invalid macro configuration: {0}")]
    InvalidMacro(String),
    #[error("genotype fails validation: {0}")]
    InvalidGenotype(String),
}

/// Exact cost of one stacked cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellCost {
    pub cell: usize,
    pub params: u64,
    pub flops: u64,
}

/// Exact parameter and MAC tallies for a genotype under a macro config.
/// Totals include the stem and head; `per_cell` covers the cells only.
#[derive(Debug, Clone, PartialEq)]
pub struct CostReport {
    pub params: u64,
    pub flops: u64,
    pub stem_params: u64,
    pub stem_flops: u64,
    pub head_params: u64,
    pub head_flops: u64,
    pub per_cell: Vec<CellCost>,
}

#[derive(Serialize)]
struct CellCostJson {
    cell: usize,
    params_m: f64,
    flops_m: f64,
}

#[derive(Serialize)]
struct CostReportJson {
    params_m: f64,
    flops_m: f64,
    per_cell: Vec<CellCostJson>,
}

impl CostReport {
    pub fn params_m(&self) -> f64 {
        self.params as f64 / 1e6
    }

    pub fn flops_m(&self) -> f64 {
        self.flops as f64 / 1e6
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(CostReportJson {
            params_m: self.params_m(),
            flops_m: self.flops_m(),
            per_cell: self
                .per_cell
                .iter()
                .map(|c| CellCostJson {
                    cell: c.cell,
                    params_m: c.params as f64 / 1e6,
                    flops_m: c.flops as f64 / 1e6,
                })
                .collect(),
        })
        .expect("cost report serializes")
    }
}

/// Parameter count of one operation application at `channels` working
/// channels.
pub fn op_params(op: Operation, channels: u64, expansion: u64) -> u64 {
    let c = channels;
    let t = expansion;
    match op {
        Operation::MaxPool3x3 | Operation::AvgPool3x3 | Operation::SkipConnect => 0,
        Operation::SepConv3x3 => c * 9 + c * c + 2 * c,
        Operation::SepConv5x5 => c * 25 + c * c + 2 * c,
        Operation::DilConv3x3 => c * 9 + c * c + 2 * c,
        Operation::DilConv5x5 => c * 25 + c * c + 2 * c,
        Operation::InvRes3x3 => c * (t * c) + (t * c) * 9 + (t * c) * c + 2 * (c + 2 * t * c),
        Operation::InvRes5x5 => c * (t * c) + (t * c) * 25 + (t * c) * c + 2 * (c + 2 * t * c),
    }
}

/// MAC count of one operation application at a square spatial size.
pub fn op_flops(op: Operation, channels: u64, spatial: u64, expansion: u64) -> u64 {
    let c = channels;
    let t = expansion;
    let area = spatial * spatial;
    match op {
        Operation::SkipConnect => 0,
        Operation::MaxPool3x3 | Operation::AvgPool3x3 => 9 * c * area,
        Operation::SepConv3x3 => (c * 9 + c * c) * area,
        Operation::SepConv5x5 => (c * 25 + c * c) * area,
        Operation::DilConv3x3 => (c * 9 + c * c) * area,
        Operation::DilConv5x5 => (c * 25 + c * c) * area,
        Operation::InvRes3x3 => (c * (t * c) + (t * c) * 9 + (t * c) * c) * area,
        Operation::InvRes5x5 => (c * (t * c) + (t * c) * 25 + (t * c) * c) * area,
    }
}

/// Parameter count of one NB201 operation (full ReLU-conv-BN convolutions).
pub fn nb201_op_params(op: Nb201Op, channels: u64) -> u64 {
    let c = channels;
    match op {
        Nb201Op::None | Nb201Op::SkipConnect | Nb201Op::AvgPool3x3 => 0,
        Nb201Op::Conv1x1 => c * c + 2 * c,
        Nb201Op::Conv3x3 => 9 * c * c + 2 * c,
    }
}

/// MAC count of one NB201 operation.
pub fn nb201_op_flops(op: Nb201Op, channels: u64, spatial: u64) -> u64 {
    let c = channels;
    let area = spatial * spatial;
    match op {
        Nb201Op::None | Nb201Op::SkipConnect => 0,
        Nb201Op::AvgPool3x3 => 9 * c * area,
        Nb201Op::Conv1x1 => c * c * area,
        Nb201Op::Conv3x3 => 9 * c * c * area,
    }
}

fn conv1x1_params(in_ch: u64, out_ch: u64) -> u64 {
    in_ch * out_ch + 2 * out_ch
}

fn conv1x1_flops(in_ch: u64, out_ch: u64, spatial: u64) -> u64 {
    in_ch * out_ch * spatial * spatial
}

/// Price a genotype under a macro configuration.
pub fn architecture_cost(genotype: &Genotype, macro_cfg: &MacroConfig) -> Result<CostReport, CostError> {
    macro_cfg.validate()?;
    let violations = genotype.validate();
    if !violations.is_empty() {
        return Err(CostError::InvalidGenotype(violations[0].to_string()));
    }
    match genotype {
        Genotype::CellBased { normal, reduction } => {
            Ok(cell_based_cost(normal, reduction, macro_cfg))
        }
        Genotype::Nb201 { ops } => Ok(nb201_cost(ops, macro_cfg)),
    }
}

fn cell_based_cost(
    normal: &crate::search_space::Cell,
    reduction: &crate::search_space::Cell,
    macro_cfg: &MacroConfig,
) -> CostReport {
    let reductions = macro_cfg.reduction_positions();
    let c0 = macro_cfg.init_channels;
    let t = macro_cfg.inv_res_expansion;

    let stem_params = 27 * c0 + 2 * c0;
    let stem_flops = 27 * c0 * macro_cfg.input_resolution * macro_cfg.input_resolution;

    let mut spatial = macro_cfg.input_resolution;
    let mut c_work = c0;
    let mut prev_prev_ch = c0;
    let mut prev_ch = c0;
    let mut per_cell = Vec::with_capacity(macro_cfg.total_cells);
    let mut params = stem_params;
    let mut flops = stem_flops;

    for cell_index in 0..macro_cfg.total_cells {
        let is_reduction = reductions.contains(&cell_index);
        if is_reduction {
            c_work *= 2;
            spatial /= 2;
        }
        let cell = if is_reduction { reduction } else { normal };

        let mut cell_params = conv1x1_params(prev_prev_ch, c_work) + conv1x1_params(prev_ch, c_work);
        let mut cell_flops =
            conv1x1_flops(prev_prev_ch, c_work, spatial) + conv1x1_flops(prev_ch, c_work, spatial);
        for gene in &cell.genes {
            let op = Operation::from_id(gene.op).expect("validated");
            cell_params += op_params(op, c_work, t);
            cell_flops += op_flops(op, c_work, spatial, t);
        }
        per_cell.push(CellCost { cell: cell_index, params: cell_params, flops: cell_flops });
        params += cell_params;
        flops += cell_flops;

        prev_prev_ch = prev_ch;
        prev_ch = 4 * c_work;
    }

    let head_params = prev_ch * macro_cfg.num_classes + macro_cfg.num_classes;
    let head_flops = prev_ch * macro_cfg.num_classes;
    params += head_params;
    flops += head_flops;

    CostReport { params, flops, stem_params, stem_flops, head_params, head_flops, per_cell }
}

fn nb201_cost(ops: &[u8; 6], macro_cfg: &MacroConfig) -> CostReport {
    let reductions = macro_cfg.reduction_positions();
    let c0 = macro_cfg.init_channels;

    let stem_params = 27 * c0 + 2 * c0;
    let stem_flops = 27 * c0 * macro_cfg.input_resolution * macro_cfg.input_resolution;

    let mut spatial = macro_cfg.input_resolution;
    let mut channels = c0;
    let mut per_cell = Vec::with_capacity(macro_cfg.total_cells);
    let mut params = stem_params;
    let mut flops = stem_flops;

    for cell_index in 0..macro_cfg.total_cells {
        let mut cell_params = 0;
        let mut cell_flops = 0;
        if reductions.contains(&cell_index) {
            // channel-doubling 1x1 transition at the reduction position
            let doubled = channels * 2;
            spatial /= 2;
            cell_params += conv1x1_params(channels, doubled);
            cell_flops += conv1x1_flops(channels, doubled, spatial);
            channels = doubled;
        }
        for &op_id in ops {
            let op = Nb201Op::from_id(op_id).expect("validated");
            cell_params += nb201_op_params(op, channels);
            cell_flops += nb201_op_flops(op, channels, spatial);
        }
        per_cell.push(CellCost { cell: cell_index, params: cell_params, flops: cell_flops });
        params += cell_params;
        flops += cell_flops;
    }

    let head_params = channels * macro_cfg.num_classes + macro_cfg.num_classes;
    let head_flops = channels * macro_cfg.num_classes;
    params += head_params;
    flops += head_flops;

    CostReport { params, flops, stem_params, stem_flops, head_params, head_flops, per_cell }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_rng;
    use crate::search_space::{random_genotype, Cell, Gene, Genotype, SpaceKind};

    #[test]
    fn skip_and_pool_carry_no_weights() {
        for op in [Operation::SkipConnect, Operation::MaxPool3x3, Operation::AvgPool3x3] {
            assert_eq!(op_params(op, 16, 6), 0);
        }
        assert_eq!(op_flops(Operation::SkipConnect, 16, 32, 6), 0);
    }

    #[test]
    fn sep_conv_3x3_at_16_channels() {
        // depthwise 16*9 + pointwise 16*16 + batch-norm 2*16
        assert_eq!(op_params(Operation::SepConv3x3, 16, 6), 432);
        assert_eq!(op_params(Operation::DilConv3x3, 16, 6), 432);
    }

    #[test]
    fn inv_res_3x3_at_16_channels_expansion_6() {
        // 16*96 + 96*9 + 96*16 + 2*(16+96+96)
        assert_eq!(op_params(Operation::InvRes3x3, 16, 6), 4352);
    }

    #[test]
    fn flops_exclude_batch_norm() {
        // (144 + 256) * 1024
        assert_eq!(op_flops(Operation::SepConv3x3, 16, 32, 6), 409_600);
        // 9 * 16 * 1024
        assert_eq!(op_flops(Operation::MaxPool3x3, 16, 32, 6), 147_456);
    }

    #[test]
    fn reduction_positions_follow_thirds() {
        let m = MacroConfig { total_cells: 8, ..MacroConfig::default() };
        assert_eq!(m.reduction_positions(), [2, 5]);
        let m = MacroConfig::for_space(SpaceKind::Nb201);
        assert_eq!(m.reduction_positions(), [5, 11]);
    }

    #[test]
    fn macro_validation_rejects_bad_configs() {
        let m = MacroConfig { total_cells: 2, ..MacroConfig::default() };
        assert!(m.validate().is_err());
        let m = MacroConfig { input_resolution: 4, ..MacroConfig::default() };
        assert!(m.validate().is_err());
        assert!(architecture_cost(&Genotype::floor_of(SpaceKind::CellBased), &m).is_err());
    }

    #[test]
    fn all_skip_cost_is_stem_preprocessing_head_only() {
        let g = Genotype::floor_of(SpaceKind::CellBased);
        let m = MacroConfig::default();
        let report = architecture_cost(&g, &m).unwrap();
        // per-cell params are exactly the two preprocessing convolutions
        let mut prev_prev = m.init_channels;
        let mut prev = m.init_channels;
        let mut c = m.init_channels;
        for (i, cell) in report.per_cell.iter().enumerate() {
            if m.reduction_positions().contains(&i) {
                c *= 2;
            }
            let expected = (prev_prev * c + 2 * c) + (prev * c + 2 * c);
            assert_eq!(cell.params, expected, "cell {i}");
            prev_prev = prev;
            prev = 4 * c;
        }
        let preprocessing: u64 = report.per_cell.iter().map(|c| c.params).sum();
        assert_eq!(
            report.params,
            report.stem_params + preprocessing + report.head_params
        );
    }

    #[test]
    fn totals_are_sum_of_parts() {
        let mut rng = derive_rng(5, 0, 0, 0);
        for _ in 0..20 {
            let g = random_genotype(&mut rng, SpaceKind::CellBased);
            let report = architecture_cost(&g, &MacroConfig::default()).unwrap();
            let cells: u64 = report.per_cell.iter().map(|c| c.params).sum();
            assert_eq!(report.params, report.stem_params + cells + report.head_params);
            let cells: u64 = report.per_cell.iter().map(|c| c.flops).sum();
            assert_eq!(report.flops, report.stem_flops + cells + report.head_flops);
        }
    }

    #[test]
    fn doubling_channels_increases_params_with_conv_edges() {
        let mut genes = Cell::all_skip().genes;
        genes[0] = Gene::new(2, 0); // one sep_conv_3x3
        let g = Genotype::CellBased { normal: Cell::new(genes), reduction: Cell::all_skip() };
        let base = MacroConfig::default();
        let doubled = MacroConfig { init_channels: base.init_channels * 2, ..base };
        let a = architecture_cost(&g, &base).unwrap();
        let b = architecture_cost(&g, &doubled).unwrap();
        assert!(b.params > a.params);
    }

    #[test]
    fn replacing_skip_with_conv_never_decreases_params() {
        let mut rng = derive_rng(6, 0, 0, 0);
        for _ in 0..20 {
            let g = random_genotype(&mut rng, SpaceKind::CellBased);
            if let Genotype::CellBased { normal, reduction } = &g {
                let mut genes = normal.genes;
                genes[3] = Gene::new(Operation::SkipConnect.id(), genes[3].index);
                let with_skip = Genotype::CellBased { normal: Cell::new(genes), reduction: *reduction };
                let mut genes = normal.genes;
                genes[3] = Gene::new(Operation::InvRes5x5.id(), genes[3].index);
                let with_conv = Genotype::CellBased { normal: Cell::new(genes), reduction: *reduction };
                let m = MacroConfig::default();
                assert!(
                    architecture_cost(&with_conv, &m).unwrap().params
                        >= architecture_cost(&with_skip, &m).unwrap().params
                );
            }
        }
    }

    #[test]
    fn flops_scale_four_fold_when_resolution_doubles() {
        let mut rng = derive_rng(7, 0, 0, 0);
        let base = MacroConfig::default();
        let doubled = MacroConfig { input_resolution: base.input_resolution * 2, ..base };
        for space in [SpaceKind::CellBased, SpaceKind::Nb201] {
            let m_base = MacroConfig { ..if space == SpaceKind::Nb201 { MacroConfig::for_space(space) } else { base } };
            let m_doubled = MacroConfig { input_resolution: m_base.input_resolution * 2, ..m_base };
            for _ in 0..10 {
                let g = random_genotype(&mut rng, space);
                let a = architecture_cost(&g, &m_base).unwrap();
                let b = architecture_cost(&g, &m_doubled).unwrap();
                let cells_a: u64 = a.per_cell.iter().map(|c| c.flops).sum();
                let cells_b: u64 = b.per_cell.iter().map(|c| c.flops).sum();
                assert_eq!(cells_b, 4 * cells_a);
                assert_eq!(a.params, b.params);
            }
        }
        let _ = doubled;
    }

    #[test]
    fn cost_invariant_under_text_round_trip() {
        let mut rng = derive_rng(8, 0, 0, 0);
        for space in [SpaceKind::CellBased, SpaceKind::Nb201] {
            let m = MacroConfig::for_space(space);
            for _ in 0..10 {
                let g = random_genotype(&mut rng, space);
                let round = Genotype::parse(&g.serialize()).unwrap();
                assert_eq!(
                    architecture_cost(&g, &m).unwrap(),
                    architecture_cost(&round, &m).unwrap()
                );
            }
        }
    }

    #[test]
    fn nb201_uniform_none_has_stem_transitions_head_only() {
        let g = Genotype::Nb201 { ops: [0; 6] };
        let m = MacroConfig::for_space(SpaceKind::Nb201);
        let report = architecture_cost(&g, &m).unwrap();
        // only the two reduction transitions carry weights
        let nonzero: Vec<&CellCost> = report.per_cell.iter().filter(|c| c.params > 0).collect();
        assert_eq!(nonzero.len(), 2);
        assert_eq!(nonzero[0].cell, 5);
        assert_eq!(nonzero[1].cell, 11);
    }

    #[test]
    fn json_export_carries_millions() {
        let g = Genotype::floor_of(SpaceKind::CellBased);
        let report = architecture_cost(&g, &MacroConfig::default()).unwrap();
        let json = report.to_json();
        assert!(json["params_m"].as_f64().unwrap() > 0.0);
        assert_eq!(json["per_cell"].as_array().unwrap().len(), 8);
        assert!((json["params_m"].as_f64().unwrap() - report.params_m()).abs() < 1e-12);
    }
}
