//! Decoding genotypes into explicit architecture graphs.
//!
//! A decoded cell has two input nodes (X1, X2), four block nodes, and one
//! output node receiving a concatenation edge from every block node. Each
//! block node receives exactly two op-edges, one per gene. NB201 genotypes
//! decode to the standard four-node cell whose six edges carry the slot
//! operations.

use super::{
    block_of_position, max_index_for_block, Cell, CellRole, GeneSource, Genotype, Nb201Op,
    Operation, BLOCKS_PER_CELL,
};
use thiserror::Error;

/// Role of a node in the decoded graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRole {
    CellInputX1,
    CellInputX2,
    BlockNode,
    CellOutput,
}

#[derive(Debug, Clone)]
pub struct GraphNode {
    pub id: usize,
    pub role: NodeRole,
    /// Cell the node belongs to; `None` for NB201 graphs.
    pub cell: Option<CellRole>,
    /// Block ordinal for block nodes (0..4), NB201 node ordinal otherwise.
    pub ordinal: usize,
}

/// Edge payload: a searched operation or the output concatenation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    CellOp(Operation),
    Nb201Op(Nb201Op),
    Concat,
}

impl EdgeKind {
    pub fn label(self) -> &'static str {
        match self {
            EdgeKind::CellOp(op) => op.label(),
            EdgeKind::Nb201Op(op) => op.label(),
            EdgeKind::Concat => "concat",
        }
    }

    pub fn is_op(self) -> bool {
        !matches!(self, EdgeKind::Concat)
    }
}

#[derive(Debug, Clone)]
pub struct GraphEdge {
    pub src: usize,
    pub dst: usize,
    pub kind: EdgeKind,
}

/// Explicit DAG form of a genotype.
#[derive(Debug, Clone)]
pub struct ArchitectureGraph {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EncodingError {
    #[error("{} cell, block {block}, gene {position}: op id {op} out of range", cell.label())]
    OpOutOfRange {
        cell: CellRole,
        block: usize,
        position: usize,
        op: u8,
    },
    #[error("{} cell, block {block}, gene {position}: index {index} not allowed (valid: 0..={max})", cell.label())]
    IndexNotAllowed {
        cell: CellRole,
        block: usize,
        position: usize,
        index: u8,
        max: u8,
    },
    #[error("nb201 slot {position}: op id {op} out of range (valid: 0..=4)")]
    Nb201OpOutOfRange { position: usize, op: u8 },
}

impl ArchitectureGraph {
    /// Number of edges carrying a searched operation (concatenation edges
    /// excluded).
    pub fn op_edge_count(&self) -> usize {
        self.edges.iter().filter(|e| e.kind.is_op()).count()
    }

    /// Kahn's algorithm; decoded graphs are acyclic by construction, the
    /// check exists for property tests and imported graphs.
    pub fn is_acyclic(&self) -> bool {
        let n = self.nodes.len();
        let mut indegree = vec![0usize; n];
        let mut outgoing: Vec<Vec<usize>> = vec![Vec::new(); n];
        for edge in &self.edges {
            indegree[edge.dst] += 1;
            outgoing[edge.src].push(edge.dst);
        }
        let mut queue: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut visited = 0;
        while let Some(node) = queue.pop() {
            visited += 1;
            for &next in &outgoing[node] {
                indegree[next] -= 1;
                if indegree[next] == 0 {
                    queue.push(next);
                }
            }
        }
        visited == n
    }

    /// Graphviz text: one cluster per cell, node labels by role, edge
    /// labels by operation kind.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph architecture {\n  rankdir=LR;\n");
        let mut clusters: Vec<(Option<CellRole>, Vec<&GraphNode>)> = Vec::new();
        for node in &self.nodes {
            match clusters.iter_mut().find(|(cell, _)| *cell == node.cell) {
                Some((_, nodes)) => nodes.push(node),
                None => clusters.push((node.cell, vec![node])),
            }
        }
        for (cell, nodes) in &clusters {
            if let Some(role) = cell {
                out.push_str(&format!(
                    "  subgraph cluster_{name} {{\n    label=\"{name} cell\";\n",
                    name = role.label()
                ));
            }
            for node in nodes {
                let label = match node.role {
                    NodeRole::CellInputX1 => "x1".to_string(),
                    NodeRole::CellInputX2 => "x2".to_string(),
                    NodeRole::BlockNode => format!("block {}", node.ordinal),
                    NodeRole::CellOutput => "output".to_string(),
                };
                let indent = if cell.is_some() { "    " } else { "  " };
                out.push_str(&format!("{indent}n{} [label=\"{label}\"];\n", node.id));
            }
            if cell.is_some() {
                out.push_str("  }\n");
            }
        }
        for edge in &self.edges {
            out.push_str(&format!(
                "  n{} -> n{} [label=\"{}\"];\n",
                edge.src,
                edge.dst,
                edge.kind.label()
            ));
        }
        out.push_str("}\n");
        out
    }
}

/// Decode a full genotype. Cell-based genotypes yield one component per
/// cell; NB201 genotypes yield the standard four-node cell.
pub fn decode(genotype: &Genotype) -> Result<ArchitectureGraph, EncodingError> {
    match genotype {
        Genotype::CellBased { normal, reduction } => {
            let mut graph = ArchitectureGraph { nodes: Vec::new(), edges: Vec::new() };
            append_cell(&mut graph, normal, CellRole::Normal)?;
            append_cell(&mut graph, reduction, CellRole::Reduction)?;
            Ok(graph)
        }
        Genotype::Nb201 { ops } => decode_nb201(ops),
    }
}

/// Decode a single cell into a standalone graph.
pub fn decode_cell(cell: &Cell, role: CellRole) -> Result<ArchitectureGraph, EncodingError> {
    let mut graph = ArchitectureGraph { nodes: Vec::new(), edges: Vec::new() };
    append_cell(&mut graph, cell, role)?;
    Ok(graph)
}

fn append_cell(
    graph: &mut ArchitectureGraph,
    cell: &Cell,
    role: CellRole,
) -> Result<(), EncodingError> {
    let base = graph.nodes.len();
    let x1 = base;
    let x2 = base + 1;
    let block_base = base + 2;
    let output = block_base + BLOCKS_PER_CELL;

    graph.nodes.push(GraphNode { id: x1, role: NodeRole::CellInputX1, cell: Some(role), ordinal: 0 });
    graph.nodes.push(GraphNode { id: x2, role: NodeRole::CellInputX2, cell: Some(role), ordinal: 1 });
    for block in 0..BLOCKS_PER_CELL {
        graph.nodes.push(GraphNode {
            id: block_base + block,
            role: NodeRole::BlockNode,
            cell: Some(role),
            ordinal: block,
        });
    }
    graph.nodes.push(GraphNode { id: output, role: NodeRole::CellOutput, cell: Some(role), ordinal: 0 });

    for (position, gene) in cell.genes.iter().enumerate() {
        let block = block_of_position(position);
        let op = Operation::from_id(gene.op).ok_or(EncodingError::OpOutOfRange {
            cell: role,
            block,
            position,
            op: gene.op,
        })?;
        if gene.index > max_index_for_block(block) {
            return Err(EncodingError::IndexNotAllowed {
                cell: role,
                block,
                position,
                index: gene.index,
                max: max_index_for_block(block),
            });
        }
        let src = match gene.source().expect("index validated above") {
            GeneSource::InputX1 => x1,
            GeneSource::InputX2 => x2,
            GeneSource::Block(b) => block_base + b as usize,
        };
        graph.edges.push(GraphEdge {
            src,
            dst: block_base + block,
            kind: EdgeKind::CellOp(op),
        });
    }
    for block in 0..BLOCKS_PER_CELL {
        graph.edges.push(GraphEdge {
            src: block_base + block,
            dst: output,
            kind: EdgeKind::Concat,
        });
    }
    Ok(())
}

/// Edge order of the standard NB201 cell: slot k connects `src -> dst`.
pub const NB201_EDGES: [(usize, usize); 6] = [(0, 1), (0, 2), (1, 2), (0, 3), (1, 3), (2, 3)];

fn decode_nb201(ops: &[u8; 6]) -> Result<ArchitectureGraph, EncodingError> {
    let mut graph = ArchitectureGraph { nodes: Vec::new(), edges: Vec::new() };
    for id in 0..4 {
        let role = match id {
            0 => NodeRole::CellInputX1,
            3 => NodeRole::CellOutput,
            _ => NodeRole::BlockNode,
        };
        graph.nodes.push(GraphNode { id, role, cell: None, ordinal: id });
    }
    for (slot, &(src, dst)) in NB201_EDGES.iter().enumerate() {
        let op = Nb201Op::from_id(ops[slot]).ok_or(EncodingError::Nb201OpOutOfRange {
            position: slot,
            op: ops[slot],
        })?;
        graph.edges.push(GraphEdge { src, dst, kind: EdgeKind::Nb201Op(op) });
    }
    Ok(graph)
}
