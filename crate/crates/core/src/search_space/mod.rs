//! Genotype encodings for the two supported search spaces.
//!
//! The cell-based space encodes an architecture as two cells (normal and
//! reduction). A cell is four blocks A–D, each holding a pair of genes, so
//! eight genes total. A gene is an `(operation, connection index)` pair;
//! the index selects the gene's input: `0` reads cell input X1, `1` reads
//! cell input X2, and `2`/`3` read the output of an earlier block via the
//! previous-index rule (`block = index - 2`). Block positions restrict the
//! allowed indices (A: `{0}`, B: `{0,1}`, C: `{0,1,2}`, D: `{0,1,2,3}`),
//! which makes every decoded graph acyclic by construction.
//!
//! The NB201 space is a flat vector of six operation slots over five
//! operations (5^6 = 15,625 architectures), one slot per edge of the
//! standard four-node cell.
//!
//! Text form: cell-based genotypes serialize as hyphen-separated two-digit
//! pairs, eight per cell, the two cells separated by `/`
//! (`40-30-.../40-30-...`); a bare eight-pair string parses as a genotype
//! with that cell in both roles. NB201 genotypes serialize as six
//! comma-separated digits (`0,1,2,3,4,0`).

mod graph;

pub use graph::{
    decode, decode_cell, ArchitectureGraph, EdgeKind, EncodingError, GraphEdge, GraphNode,
    NodeRole,
};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of operations in the cell-based space.
pub const CELL_OP_COUNT: usize = 9;
/// Number of operations in the NB201 space.
pub const NB201_OP_COUNT: usize = 5;
/// Genes per cell (four blocks, two genes each).
pub const GENES_PER_CELL: usize = 8;
/// Blocks per cell.
pub const BLOCKS_PER_CELL: usize = 4;
/// Operation slots in an NB201 genotype.
pub const NB201_SLOTS: usize = 6;
/// Size of the NB201 space: 5^6 distinct genotypes.
pub const NB201_SPACE_SIZE: usize = 15_625;

/// Which search space a genotype or run lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    CellBased,
    Nb201,
}

impl SpaceKind {
    /// Number of operations available per gene in this space.
    pub fn op_count(self) -> usize {
        match self {
            SpaceKind::CellBased => CELL_OP_COUNT,
            SpaceKind::Nb201 => NB201_OP_COUNT,
        }
    }
}

/// The nine cell-based operations. `id` and kind are a bijection over
/// `0..=8`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operation {
    MaxPool3x3,
    AvgPool3x3,
    SepConv3x3,
    SepConv5x5,
    DilConv3x3,
    DilConv5x5,
    InvRes3x3,
    InvRes5x5,
    SkipConnect,
}

impl Operation {
    pub const ALL: [Operation; CELL_OP_COUNT] = [
        Operation::MaxPool3x3,
        Operation::AvgPool3x3,
        Operation::SepConv3x3,
        Operation::SepConv5x5,
        Operation::DilConv3x3,
        Operation::DilConv5x5,
        Operation::InvRes3x3,
        Operation::InvRes5x5,
        Operation::SkipConnect,
    ];

    pub fn from_id(id: u8) -> Option<Operation> {
        Self::ALL.get(id as usize).copied()
    }

    pub fn id(self) -> u8 {
        Self::ALL.iter().position(|&op| op == self).unwrap() as u8
    }

    pub fn label(self) -> &'static str {
        match self {
            Operation::MaxPool3x3 => "max_pool_3x3",
            Operation::AvgPool3x3 => "avg_pool_3x3",
            Operation::SepConv3x3 => "sep_conv_3x3",
            Operation::SepConv5x5 => "sep_conv_5x5",
            Operation::DilConv3x3 => "dil_conv_3x3",
            Operation::DilConv5x5 => "dil_conv_5x5",
            Operation::InvRes3x3 => "inv_res_3x3",
            Operation::InvRes5x5 => "inv_res_5x5",
            Operation::SkipConnect => "skip_connect",
        }
    }
}

/// The five NB201 operations, in the benchmark's canonical slot order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Nb201Op {
    None,
    SkipConnect,
    Conv1x1,
    Conv3x3,
    AvgPool3x3,
}

impl Nb201Op {
    pub const ALL: [Nb201Op; NB201_OP_COUNT] = [
        Nb201Op::None,
        Nb201Op::SkipConnect,
        Nb201Op::Conv1x1,
        Nb201Op::Conv3x3,
        Nb201Op::AvgPool3x3,
    ];

    pub fn from_id(id: u8) -> Option<Nb201Op> {
        Self::ALL.get(id as usize).copied()
    }

    pub fn label(self) -> &'static str {
        match self {
            Nb201Op::None => "none",
            Nb201Op::SkipConnect => "skip_connect",
            Nb201Op::Conv1x1 => "conv_1x1",
            Nb201Op::Conv3x3 => "conv_3x3",
            Nb201Op::AvgPool3x3 => "avg_pool_3x3",
        }
    }
}

/// One `(operation id, connection index)` pair. Raw ids are kept so that
/// out-of-range encodings remain representable; [`Genotype::validate`]
/// reports them as violations instead of making them unconstructible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Gene {
    pub op: u8,
    pub index: u8,
}

impl Gene {
    pub fn new(op: u8, index: u8) -> Gene {
        Gene { op, index }
    }

    /// Input read by this gene: X1, X2, or an earlier block's output.
    /// `None` for indices outside the encodable range `0..=3`.
    pub fn source(&self) -> Option<GeneSource> {
        match self.index {
            0 => Some(GeneSource::InputX1),
            1 => Some(GeneSource::InputX2),
            2 | 3 => Some(GeneSource::Block(self.index - 2)),
            _ => None,
        }
    }
}

/// Where a gene reads its input from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneSource {
    InputX1,
    InputX2,
    /// Output of block `0` (A) or `1` (B).
    Block(u8),
}

/// Map a connection index of `2` or `3` to the block whose output it reads.
pub fn previous_index(index: u8) -> Result<u8, SpaceError> {
    if (2..=3).contains(&index) {
        Ok(index - 2)
    } else {
        Err(SpaceError::NotABlockIndex { index })
    }
}

/// Block holding a gene position (positions `2j` and `2j+1` belong to
/// block `j`).
pub fn block_of_position(position: usize) -> usize {
    position / 2
}

/// Largest connection index allowed in a block: block A (`0`) may only
/// read X1, block D (`3`) may read X1, X2, or either earlier block.
pub fn max_index_for_block(block: usize) -> u8 {
    block as u8
}

/// One cell: blocks A–D as eight genes in block order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Cell {
    pub genes: [Gene; GENES_PER_CELL],
}

impl Cell {
    pub fn new(genes: [Gene; GENES_PER_CELL]) -> Cell {
        Cell { genes }
    }

    /// Cell whose every gene is `skip_connect` reading the lowest-allowed
    /// index. This is the parameter floor of the cell-based space.
    pub fn all_skip() -> Cell {
        let skip = Operation::SkipConnect.id();
        Cell {
            genes: [Gene::new(skip, 0); GENES_PER_CELL],
        }
    }

    fn to_text(self) -> String {
        self.genes
            .iter()
            .map(|g| format!("{}{}", g.op, g.index))
            .collect::<Vec<_>>()
            .join("-")
    }
}

/// Role a cell plays in the stacked network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellRole {
    Normal,
    Reduction,
}

impl CellRole {
    pub fn label(self) -> &'static str {
        match self {
            CellRole::Normal => "normal",
            CellRole::Reduction => "reduction",
        }
    }
}

/// An encoded architecture: either two cells or an NB201 op vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Genotype {
    CellBased { normal: Cell, reduction: Cell },
    Nb201 { ops: [u8; NB201_SLOTS] },
}

/// A single constraint violation found by [`Genotype::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Cell the offending gene lives in; `None` for NB201 genotypes.
    pub cell: Option<CellRole>,
    /// Gene position within the cell (0..8) or slot (0..6).
    pub position: usize,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.cell {
            Some(role) => write!(f, "{} cell, position {}: {}", role.label(), self.position, self.message),
            None => write!(f, "slot {}: {}", self.position, self.message),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SpaceError {
    #[error("index {index} does not reference a block node (indices 0/1 read the cell inputs)")]
    NotABlockIndex { index: u8 },
}

/// Text-format errors. Positions are zero-based pair/slot ordinals.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("empty genotype text")]
    Empty,
    #[error("expected one cell or two cells separated by `/`, found {found} segments")]
    WrongCellCount { found: usize },
    #[error("cell {cell} has {found} gene pairs, expected {expected}")]
    WrongPairCount { cell: usize, found: usize, expected: usize },
    #[error("cell {cell}, pair {position} (`{text}`): expected exactly two digits")]
    BadPair { cell: usize, position: usize, text: String },
    #[error("nb201 vector has {found} slots, expected {expected}")]
    WrongSlotCount { found: usize, expected: usize },
    #[error("nb201 slot {position} (`{text}`): expected a single digit")]
    BadSlot { position: usize, text: String },
}

impl Genotype {
    pub fn space(&self) -> SpaceKind {
        match self {
            Genotype::CellBased { .. } => SpaceKind::CellBased,
            Genotype::Nb201 { .. } => SpaceKind::Nb201,
        }
    }

    /// Genotype with the smallest parameter count of its space: all
    /// `skip_connect` for the cell-based space, all `none` for NB201.
    pub fn floor_of(space: SpaceKind) -> Genotype {
        match space {
            SpaceKind::CellBased => Genotype::CellBased {
                normal: Cell::all_skip(),
                reduction: Cell::all_skip(),
            },
            SpaceKind::Nb201 => Genotype::Nb201 { ops: [0; NB201_SLOTS] },
        }
    }

    /// Number of mutable gene positions (16 cell-based, 6 NB201).
    pub fn position_count(&self) -> usize {
        match self {
            Genotype::CellBased { .. } => 2 * GENES_PER_CELL,
            Genotype::Nb201 { .. } => NB201_SLOTS,
        }
    }

    /// Gene at a flat position: normal cell 0..8, reduction cell 8..16.
    /// NB201 slots map to genes with index 0.
    pub fn gene_at(&self, position: usize) -> Option<Gene> {
        match self {
            Genotype::CellBased { normal, reduction } => {
                if position < GENES_PER_CELL {
                    Some(normal.genes[position])
                } else if position < 2 * GENES_PER_CELL {
                    Some(reduction.genes[position - GENES_PER_CELL])
                } else {
                    None
                }
            }
            Genotype::Nb201 { ops } => ops.get(position).map(|&op| Gene::new(op, 0)),
        }
    }

    /// Copy of this genotype with the gene at `position` replaced.
    /// For NB201 only the gene's `op` field is meaningful.
    pub fn with_gene_at(&self, position: usize, gene: Gene) -> Option<Genotype> {
        match self {
            Genotype::CellBased { normal, reduction } => {
                if position < GENES_PER_CELL {
                    let mut cell = *normal;
                    cell.genes[position] = gene;
                    Some(Genotype::CellBased { normal: cell, reduction: *reduction })
                } else if position < 2 * GENES_PER_CELL {
                    let mut cell = *reduction;
                    cell.genes[position - GENES_PER_CELL] = gene;
                    Some(Genotype::CellBased { normal: *normal, reduction: cell })
                } else {
                    None
                }
            }
            Genotype::Nb201 { ops } => {
                if position < NB201_SLOTS {
                    let mut ops = *ops;
                    ops[position] = gene.op;
                    Some(Genotype::Nb201 { ops })
                } else {
                    None
                }
            }
        }
    }

    /// Distinct operation ids used, for diversity scoring.
    pub fn distinct_op_count(&self) -> usize {
        let mut seen = [false; 10];
        match self {
            Genotype::CellBased { normal, reduction } => {
                for g in normal.genes.iter().chain(reduction.genes.iter()) {
                    if let Some(slot) = seen.get_mut(g.op as usize) {
                        *slot = true;
                    }
                }
            }
            Genotype::Nb201 { ops } => {
                for &op in ops {
                    if let Some(slot) = seen.get_mut(op as usize) {
                        *slot = true;
                    }
                }
            }
        }
        seen.iter().filter(|&&s| s).count()
    }

    /// Check op-id ranges and per-block index sets. Empty result means the
    /// genotype is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut violations = Vec::new();
        match self {
            Genotype::CellBased { normal, reduction } => {
                for (role, cell) in [(CellRole::Normal, normal), (CellRole::Reduction, reduction)] {
                    for (position, gene) in cell.genes.iter().enumerate() {
                        if gene.op as usize >= CELL_OP_COUNT {
                            violations.push(Violation {
                                cell: Some(role),
                                position,
                                message: format!("op id {} out of range (valid: 0..=8)", gene.op),
                            });
                        }
                        let block = block_of_position(position);
                        if gene.index > max_index_for_block(block) {
                            violations.push(Violation {
                                cell: Some(role),
                                position,
                                message: format!(
                                    "index {} not allowed in block {} (valid: 0..={})",
                                    gene.index,
                                    ["A", "B", "C", "D"][block],
                                    max_index_for_block(block)
                                ),
                            });
                        }
                    }
                }
            }
            Genotype::Nb201 { ops } => {
                for (position, &op) in ops.iter().enumerate() {
                    if op as usize >= NB201_OP_COUNT {
                        violations.push(Violation {
                            cell: None,
                            position,
                            message: format!("op id {} out of range (valid: 0..=4)", op),
                        });
                    }
                }
            }
        }
        violations
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// Canonical text form. This string keys caches and benchmark tables.
    pub fn serialize(&self) -> String {
        match self {
            Genotype::CellBased { normal, reduction } => {
                format!("{}/{}", normal.to_text(), reduction.to_text())
            }
            Genotype::Nb201 { ops } => ops
                .iter()
                .map(|op| op.to_string())
                .collect::<Vec<_>>()
                .join(","),
        }
    }

    /// Parse the text form. A bare eight-pair cell string is accepted and
    /// used for both cells; `serialize` always emits the two-cell form, so
    /// `parse(serialize(g)) == g` on all valid genotypes.
    pub fn parse(text: &str) -> Result<Genotype, ParseError> {
        let text = text.trim();
        if text.is_empty() {
            return Err(ParseError::Empty);
        }
        if text.contains(',') {
            return parse_nb201(text);
        }
        let segments: Vec<&str> = text.split('/').collect();
        match segments.as_slice() {
            [single] => {
                let cell = parse_cell(single, 0)?;
                Ok(Genotype::CellBased { normal: cell, reduction: cell })
            }
            [normal, reduction] => Ok(Genotype::CellBased {
                normal: parse_cell(normal, 0)?,
                reduction: parse_cell(reduction, 1)?,
            }),
            _ => Err(ParseError::WrongCellCount { found: segments.len() }),
        }
    }
}

impl std::fmt::Display for Genotype {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.serialize())
    }
}

fn parse_cell(text: &str, cell: usize) -> Result<Cell, ParseError> {
    let pairs: Vec<&str> = text.split('-').collect();
    if pairs.len() != GENES_PER_CELL {
        return Err(ParseError::WrongPairCount {
            cell,
            found: pairs.len(),
            expected: GENES_PER_CELL,
        });
    }
    let mut genes = [Gene::new(0, 0); GENES_PER_CELL];
    for (position, pair) in pairs.iter().enumerate() {
        let digits: Vec<u8> = pair
            .chars()
            .map(|c| c.to_digit(10).map(|d| d as u8))
            .collect::<Option<_>>()
            .unwrap_or_default();
        if digits.len() != 2 {
            return Err(ParseError::BadPair {
                cell,
                position,
                text: (*pair).to_string(),
            });
        }
        genes[position] = Gene::new(digits[0], digits[1]);
    }
    Ok(Cell::new(genes))
}

fn parse_nb201(text: &str) -> Result<Genotype, ParseError> {
    let slots: Vec<&str> = text.split(',').collect();
    if slots.len() != NB201_SLOTS {
        return Err(ParseError::WrongSlotCount {
            found: slots.len(),
            expected: NB201_SLOTS,
        });
    }
    let mut ops = [0u8; NB201_SLOTS];
    for (position, slot) in slots.iter().enumerate() {
        let slot = slot.trim();
        let digit = if slot.len() == 1 {
            slot.chars().next().and_then(|c| c.to_digit(10))
        } else {
            None
        };
        match digit {
            Some(d) => ops[position] = d as u8,
            None => {
                return Err(ParseError::BadSlot {
                    position,
                    text: slot.to_string(),
                })
            }
        }
    }
    Ok(Genotype::Nb201 { ops })
}

/// Sample a uniformly random gene for a block: op uniform over the nine
/// operations, index uniform over the block's allowed set.
pub fn random_gene<R: Rng + ?Sized>(rng: &mut R, block: usize) -> Gene {
    let op = rng.gen_range(0..CELL_OP_COUNT as u8);
    let index = rng.gen_range(0..=max_index_for_block(block));
    Gene::new(op, index)
}

fn random_cell<R: Rng + ?Sized>(rng: &mut R) -> Cell {
    let mut genes = [Gene::new(0, 0); GENES_PER_CELL];
    for (position, gene) in genes.iter_mut().enumerate() {
        *gene = random_gene(rng, block_of_position(position));
    }
    Cell::new(genes)
}

/// Sample a uniformly random genotype. The result always validates.
pub fn random_genotype<R: Rng + ?Sized>(rng: &mut R, space: SpaceKind) -> Genotype {
    match space {
        SpaceKind::CellBased => Genotype::CellBased {
            normal: random_cell(rng),
            reduction: random_cell(rng),
        },
        SpaceKind::Nb201 => {
            let mut ops = [0u8; NB201_SLOTS];
            for op in ops.iter_mut() {
                *op = rng.gen_range(0..NB201_OP_COUNT as u8);
            }
            Genotype::Nb201 { ops }
        }
    }
}

/// Enumerate the full NB201 space in lexicographic slot order.
pub fn enumerate_nb201() -> impl Iterator<Item = Genotype> {
    (0..NB201_SPACE_SIZE).map(|mut value| {
        let mut ops = [0u8; NB201_SLOTS];
        for slot in (0..NB201_SLOTS).rev() {
            ops[slot] = (value % NB201_OP_COUNT) as u8;
            value /= NB201_OP_COUNT;
        }
        Genotype::Nb201 { ops }
    })
}
