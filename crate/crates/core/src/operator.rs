//! The one-step unitary `U` on a truncated edge basis, and walk states.
//!
//! `U` is stored column-compressed: column `(A,B)` holds the amplitudes for a
//! particle on `A -> B` to leave `B` along each of `B`'s edges after one step.
//! Every column therefore has at most `deg(B)` nonzeros, all in rows of the
//! form `(B,C)`.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::graph::{unitarity_deviation, EdgeBasis, Node, OrientedEdge, Port, TailedGraph, UNITARITY_TOL};

#[derive(Debug, Error, PartialEq)]
pub enum OperatorError {
    #[error("local unitary at `{vertex}` deviates from unitarity by {deviation:e}")]
    NonUnitaryBlock { vertex: String, deviation: f64 },
    #[error("edge basis was not built from this graph")]
    ForeignBasis,
    #[error("walk state and operator live on different edge bases")]
    BasisMismatch,
    #[error("amplitude vector has length {got}, basis has {expected} edges")]
    LengthMismatch { expected: usize, got: usize },
}

/// One vertex's local scattering matrix and where it sits inside `U`.
#[derive(Debug, Clone)]
pub struct VertexBlock {
    pub node: Node,
    /// Neighbouring nodes in port order.
    pub ports: Vec<Node>,
    /// Basis index of `(port_k -> node)` for each port.
    pub in_edges: Vec<usize>,
    /// Basis index of `(node -> port_k)` for each port.
    pub out_edges: Vec<usize>,
    /// `matrix[(k, l)]` = amplitude from in-edge `l` to out-edge `k`.
    pub matrix: DMatrix<Complex64>,
}

#[derive(Debug, Clone)]
pub struct StepOperator {
    basis: Arc<EdgeBasis>,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<Complex64>,
    blocks: Vec<VertexBlock>,
}

/// Assembles `U` from the local unitaries of every vertex in the window.
///
/// Interior vertices use their rules from `graph`; tail vertices propagate
/// freely and the outermost tail vertex on each side reflects.
pub fn assemble(graph: &TailedGraph, basis: Arc<EdgeBasis>) -> Result<StepOperator, OperatorError> {
    if basis.labels() != graph.sorted_labels().as_slice()
        || basis.entry_node() != basis.interior_node(graph.entry()).ok_or(OperatorError::ForeignBasis)?
        || basis.exit_node() != basis.interior_node(graph.exit()).ok_or(OperatorError::ForeignBasis)?
        || basis.interior_len() != 2 * graph.edges().len()
    {
        return Err(OperatorError::ForeignBasis);
    }

    let edge_index = |from: Node, to: Node| -> Result<usize, OperatorError> {
        basis
            .index_of(&OrientedEdge::new(from, to))
            .ok_or(OperatorError::ForeignBasis)
    };

    let mut blocks = Vec::new();
    for (i, label) in basis.labels().iter().enumerate() {
        let node = Node::Interior(i);
        let (ports, matrix) = graph.local_block(label).ok_or(OperatorError::ForeignBasis)?;
        let deviation = unitarity_deviation(&matrix);
        if deviation > UNITARITY_TOL {
            return Err(OperatorError::NonUnitaryBlock {
                vertex: label.clone(),
                deviation,
            });
        }
        let neighbors: Vec<Node> = ports
            .iter()
            .map(|p| match p {
                Port::TailIn => Ok(Node::InTail(1)),
                Port::TailOut => Ok(Node::OutTail(1)),
                Port::Neighbor(l) => basis.interior_node(l).ok_or(OperatorError::ForeignBasis),
            })
            .collect::<Result<_, _>>()?;
        blocks.push(block(node, neighbors, matrix, &edge_index)?);
    }

    let len = basis.tail_length();
    let swap = DMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
        ],
    );
    let mirror = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
    for d in 1..=len {
        for (node, inner, outer) in [
            (Node::InTail(d), basis.in_tail(d - 1), Node::InTail(d + 1)),
            (Node::OutTail(d), basis.out_tail(d - 1), Node::OutTail(d + 1)),
        ] {
            let b = if d < len {
                block(node, vec![inner, outer], swap.clone(), &edge_index)?
            } else {
                block(node, vec![inner], mirror.clone(), &edge_index)?
            };
            blocks.push(b);
        }
    }

    Ok(StepOperator::from_blocks(basis, blocks))
}

fn block(
    node: Node,
    ports: Vec<Node>,
    matrix: DMatrix<Complex64>,
    edge_index: &impl Fn(Node, Node) -> Result<usize, OperatorError>,
) -> Result<VertexBlock, OperatorError> {
    let in_edges = ports.iter().map(|&p| edge_index(p, node)).collect::<Result<_, _>>()?;
    let out_edges = ports.iter().map(|&p| edge_index(node, p)).collect::<Result<_, _>>()?;
    Ok(VertexBlock {
        node,
        ports,
        in_edges,
        out_edges,
        matrix,
    })
}

impl StepOperator {
    /// Builds the truncated window of `graph` and assembles `U` on it.
    pub fn for_graph(graph: &TailedGraph, tail_length: usize) -> Result<StepOperator, OperatorError> {
        assemble(graph, Arc::new(crate::graph::truncate(graph, tail_length)))
    }

    fn from_blocks(basis: Arc<EdgeBasis>, blocks: Vec<VertexBlock>) -> StepOperator {
        let n = basis.len();
        let mut columns: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); n];
        for b in &blocks {
            for (l, &col) in b.in_edges.iter().enumerate() {
                for (k, &row) in b.out_edges.iter().enumerate() {
                    let v = b.matrix[(k, l)];
                    if v != Complex64::new(0.0, 0.0) {
                        columns[col].push((row, v));
                    }
                }
            }
        }
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for mut col in columns {
            col.sort_by_key(|&(r, _)| r);
            for (r, v) in col {
                row_idx.push(r);
                values.push(v);
            }
            col_ptr.push(row_idx.len());
        }
        StepOperator {
            basis,
            col_ptr,
            row_idx,
            values,
            blocks,
        }
    }

    pub fn basis(&self) -> &Arc<EdgeBasis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn blocks(&self) -> &[VertexBlock] {
        &self.blocks
    }

    /// Nonzeros of column `col` as `(row, value)`, rows ascending.
    pub fn column(&self, col: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let span = self.col_ptr[col]..self.col_ptr[col + 1];
        self.row_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    /// Matrix element `<row|U|col>`.
    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.column(col)
            .find(|&(r, _)| r == row)
            .map(|(_, v)| v)
            .unwrap_or_default()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for c in 0..n {
            for (r, v) in self.column(c) {
                m[(r, c)] = v;
            }
        }
        m
    }

    /// `U x` on a raw amplitude vector.
    pub fn apply_slice(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::default(); self.dim()];
        for (c, &xc) in x.iter().enumerate() {
            if xc == Complex64::default() {
                continue;
            }
            for (r, v) in self.column(c) {
                y[r] += v * xc;
            }
        }
        y
    }

    /// One step of the walk.
    pub fn apply(&self, psi: &WalkState) -> Result<WalkState, OperatorError> {
        if !same_basis(&self.basis, &psi.basis) {
            return Err(OperatorError::BasisMismatch);
        }
        Ok(WalkState {
            basis: Arc::clone(&self.basis),
            amplitudes: self.apply_slice(&psi.amplitudes),
            normalized: psi.normalized,
        })
    }

    #[cfg(test)]
    pub(crate) fn corrupt_block(&mut self, block: usize, k: usize, l: usize, value: Complex64) {
        self.blocks[block].matrix[(k, l)] = value;
        let blocks = std::mem::take(&mut self.blocks);
        *self = StepOperator::from_blocks(Arc::clone(&self.basis), blocks);
    }
}

pub(crate) fn same_basis(a: &Arc<EdgeBasis>, b: &Arc<EdgeBasis>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// `max |U^H U - I|` over all entries.
pub fn check_unitarity(op: &StepOperator) -> f64 {
    let n = op.dim();
    let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); n];
    for c in 0..n {
        for (r, v) in op.column(c) {
            rows[r].push((c, v));
        }
    }
    let mut gram: HashMap<(usize, usize), Complex64> = HashMap::new();
    for row in &rows {
        for &(a, va) in row {
            for &(b, vb) in row {
                *gram.entry((a, b)).or_default() += va.conj() * vb;
            }
        }
    }
    let mut worst = 0.0_f64;
    for c in 0..n {
        if !gram.contains_key(&(c, c)) {
            worst = worst.max(1.0);
        }
    }
    for (&(a, b), &v) in &gram {
        let target = if a == b { 1.0 } else { 0.0 };
        worst = worst.max((v - target).norm());
    }
    worst
}

/// A complex amplitude over the oriented edges of a basis.
#[derive(Debug, Clone)]
pub struct WalkState {
    basis: Arc<EdgeBasis>,
    amplitudes: Vec<Complex64>,
    normalized: bool,
}

impl WalkState {
    pub fn zeros(basis: Arc<EdgeBasis>) -> Self {
        let n = basis.len();
        WalkState {
            basis,
            amplitudes: vec![Complex64::default(); n],
            normalized: false,
        }
    }

    /// The normalized state `|edge>`. Returns `None` if the edge is not in
    /// the basis.
    pub fn basis_state(basis: Arc<EdgeBasis>, edge: OrientedEdge) -> Option<Self> {
        let i = basis.index_of(&edge)?;
        let mut s = WalkState::zeros(basis);
        s.amplitudes[i] = Complex64::new(1.0, 0.0);
        s.normalized = true;
        Some(s)
    }

    pub fn from_amplitudes(basis: Arc<EdgeBasis>, amplitudes: Vec<Complex64>) -> Result<Self, OperatorError> {
        if amplitudes.len() != basis.len() {
            return Err(OperatorError::LengthMismatch {
                expected: basis.len(),
                got: amplitudes.len(),
            });
        }
        let normalized = (norm(&amplitudes) - 1.0).abs() < 1e-12;
        Ok(WalkState {
            basis,
            amplitudes,
            normalized,
        })
    }

    pub fn basis(&self) -> &Arc<EdgeBasis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, edge: &OrientedEdge) -> Complex64 {
        self.basis
            .index_of(edge)
            .map(|i| self.amplitudes[i])
            .unwrap_or_default()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amplitudes)
    }

    /// Whether the state was built or rescaled to unit norm. Intermediate
    /// states of a monitored walk are not.
    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Rescales to unit norm; leaves the zero vector untouched.
    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            for a in &mut self.amplitudes {
                *a /= n;
            }
            self.normalized = true;
        }
    }

    pub(crate) fn from_parts(basis: Arc<EdgeBasis>, amplitudes: Vec<Complex64>, normalized: bool) -> Self {
        WalkState {
            basis,
            amplitudes,
            normalized,
        }
    }
}

pub(crate) fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Weight of `psi` on edges *ending* at vertices in `set`.
pub fn flux_into(psi: &WalkState, set: impl Fn(Node) -> bool) -> f64 {
    psi.basis
        .edges()
        .iter()
        .zip(&psi.amplitudes)
        .filter(|(e, _)| set(e.to))
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

/// Weight of `psi` on edges *starting* at vertices in `set`.
pub fn flux_out_of(psi: &WalkState, set: impl Fn(Node) -> bool) -> f64 {
    psi.basis
        .edges()
        .iter()
        .zip(&psi.amplitudes)
        .filter(|(e, _)| set(e.from))
        .map(|(_, a)| a.norm_sqr())
        .sum()
}
