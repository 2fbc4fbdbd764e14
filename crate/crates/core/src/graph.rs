//! Finite graphs with two attached tails, their vertex scattering rules, and
//! the oriented-edge basis used by every other module.
//!
//! A [`TailedGraph`] is the finite interior graph plus two implicit
//! semi-infinite chains of free vertices: the *in* tail attached at the entry
//! vertex and the *out* tail attached at the exit vertex. Walks live on
//! oriented edges, so a finite window of the tails is cut out by
//! [`truncate`], which produces an [`EdgeBasis`].

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

mod format;

pub use format::{parse_graph, serialize_graph};

/// Tolerance used when validating user-supplied vertex unitaries.
pub const UNITARITY_TOL: f64 = 1e-12;

/// Label prefix reserved for tail vertices.
pub const TAIL_PREFIX: &str = "tail_";

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<GraphError>,
    },
    #[error("grover vertex needs a positive degree")]
    ZeroDegree,
    #[error("vertex `{vertex}` expects degree {expected} but has {actual} incident edges")]
    DegreeMismatch {
        vertex: String,
        expected: usize,
        actual: usize,
    },
    #[error("vertex `{vertex}`: local matrix deviates from unitarity by {deviation:e}")]
    NonUnitary { vertex: String, deviation: f64 },
    #[error("vertex `{vertex}`: custom matrix must be square, got {rows}x{cols}")]
    NotSquare { vertex: String, rows: usize, cols: usize },
    #[error("vertex `{vertex}`: |t|^2 + |r|^2 = {norm} (must be 1)")]
    TwoPortNorm { vertex: String, norm: f64 },
    #[error("missing `{0}` declaration")]
    MissingTail(&'static str),
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("vertex `{0}` declared twice")]
    DuplicateVertex(String),
    #[error("edge {0}--{1} declared twice")]
    DuplicateEdge(String, String),
    #[error("self-loop at `{0}` is not supported")]
    SelfLoop(String),
    #[error("invalid vertex label `{0}`")]
    InvalidLabel(String),
    #[error("edge {a}--{b}: phase endpoint `{endpoint}` is not on this edge")]
    PhaseEndpoint { a: String, b: String, endpoint: String },
    #[error("non-finite number in {0}")]
    NonFinite(String),
}

impl GraphError {
    pub(crate) fn at_line(self, line: usize) -> GraphError {
        match self {
            e @ (GraphError::Syntax { .. } | GraphError::AtLine { .. }) => e,
            e => GraphError::AtLine {
                line,
                source: Box::new(e),
            },
        }
    }
}

/// Reflection and transmission amplitudes `(r, t)` of an equal-transmission
/// vertex of the given degree.
pub fn grover_coefficients(degree: usize) -> Result<(Complex64, Complex64), GraphError> {
    if degree == 0 {
        return Err(GraphError::ZeroDegree);
    }
    let n = degree as f64;
    Ok((Complex64::new((2.0 - n) / n, 0.0), Complex64::new(2.0 / n, 0.0)))
}

/// Scattering rule of a single vertex.
///
/// Local matrices are indexed by the vertex's ports in canonical order (see
/// [`Port`]): entry `(k, l)` is the amplitude for a particle arriving along
/// port `l` to leave along port `k`.
#[derive(Debug, Clone, PartialEq)]
pub enum VertexKind {
    /// Equal-transmission vertex: reflection `2/n - 1`, transmission `2/n`.
    Grover {
        degree: usize,
    },
    /// Degree-2 beam splitter. Arriving on the first port sends `t` forward
    /// and `r` back; arriving on the second port sends `t*` forward and
    /// `-r*` back.
    TwoPort {
        t: Complex64,
        r: Complex64,
    },
    /// Free propagation, identical to `TwoPort { t: 1, r: 0 }`.
    Free,
    Custom {
        matrix: DMatrix<Complex64>,
    },
    /// Multiplies the whole local unitary of `inner` by `e^{i phi}`.
    Phase {
        phi: f64,
        inner: Box<VertexKind>,
    },
}

impl VertexKind {
    /// Number of ports this rule is defined for.
    pub fn dimension(&self) -> usize {
        match self {
            VertexKind::Grover { degree } => *degree,
            VertexKind::TwoPort { .. } | VertexKind::Free => 2,
            VertexKind::Custom { matrix } => matrix.nrows(),
            VertexKind::Phase { inner, .. } => inner.dimension(),
        }
    }

    pub fn local_matrix(&self) -> DMatrix<Complex64> {
        match self {
            VertexKind::Grover { degree } => {
                let n = *degree;
                let (r, t) = grover_coefficients(n).expect("validated degree");
                DMatrix::from_fn(n, n, |i, j| if i == j { r } else { t })
            }
            VertexKind::TwoPort { t, r } => two_port_matrix(*t, *r),
            VertexKind::Free => two_port_matrix(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)),
            VertexKind::Custom { matrix } => matrix.clone(),
            VertexKind::Phase { phi, inner } => inner.local_matrix() * Complex64::from_polar(1.0, *phi),
        }
    }

    fn validate(&self, vertex: &str) -> Result<(), GraphError> {
        match self {
            VertexKind::Grover { degree } => {
                if *degree == 0 {
                    return Err(GraphError::ZeroDegree);
                }
            }
            VertexKind::TwoPort { t, r } => {
                if !(t.re.is_finite() && t.im.is_finite() && r.re.is_finite() && r.im.is_finite()) {
                    return Err(GraphError::NonFinite(format!("two_port `{vertex}`")));
                }
                let norm = t.norm_sqr() + r.norm_sqr();
                if (norm - 1.0).abs() > UNITARITY_TOL {
                    return Err(GraphError::TwoPortNorm {
                        vertex: vertex.to_string(),
                        norm,
                    });
                }
            }
            VertexKind::Free => {}
            VertexKind::Custom { matrix } => {
                if matrix.nrows() != matrix.ncols() {
                    return Err(GraphError::NotSquare {
                        vertex: vertex.to_string(),
                        rows: matrix.nrows(),
                        cols: matrix.ncols(),
                    });
                }
                if matrix.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                    return Err(GraphError::NonFinite(format!("custom `{vertex}`")));
                }
                let deviation = unitarity_deviation(matrix);
                if deviation > UNITARITY_TOL {
                    return Err(GraphError::NonUnitary {
                        vertex: vertex.to_string(),
                        deviation,
                    });
                }
            }
            VertexKind::Phase { phi, inner } => {
                if !phi.is_finite() {
                    return Err(GraphError::NonFinite(format!("phase of `{vertex}`")));
                }
                inner.validate(vertex)?;
            }
        }
        Ok(())
    }
}

fn two_port_matrix(t: Complex64, r: Complex64) -> DMatrix<Complex64> {
    DMatrix::from_row_slice(2, 2, &[r, t.conj(), t, -r.conj()])
}

/// `max |M^H M - I|` over all entries.
pub fn unitarity_deviation(m: &DMatrix<Complex64>) -> f64 {
    let gram = m.adjoint() * m;
    let mut worst = 0.0_f64;
    for i in 0..gram.nrows() {
        for j in 0..gram.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - target).norm());
        }
    }
    worst
}

#[derive(Debug, Clone, PartialEq)]
pub struct VertexSpec {
    pub label: String,
    pub kind: VertexKind,
}

impl VertexSpec {
    pub fn new(label: impl Into<String>, kind: VertexKind) -> Self {
        VertexSpec {
            label: label.into(),
            kind,
        }
    }
}

/// An undirected interior edge with optional phase shifters placed just
/// before either endpoint.
///
/// A shifter of phase `phi` at endpoint `v` multiplies both the amplitude
/// entering `v` along this edge and the amplitude leaving `v` along it by
/// `e^{i phi}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSpec {
    pub a: String,
    pub b: String,
    pub endpoint_phase: BTreeMap<String, f64>,
}

impl EdgeSpec {
    pub fn new(a: impl Into<String>, b: impl Into<String>) -> Self {
        EdgeSpec {
            a: a.into(),
            b: b.into(),
            endpoint_phase: BTreeMap::new(),
        }
    }

    pub fn with_phase(mut self, endpoint: impl Into<String>, phi: f64) -> Self {
        self.endpoint_phase.insert(endpoint.into(), phi);
        self
    }

    fn key(&self) -> (String, String) {
        if self.a <= self.b {
            (self.a.clone(), self.b.clone())
        } else {
            (self.b.clone(), self.a.clone())
        }
    }

    fn other(&self, v: &str) -> &str {
        if self.a == v {
            &self.b
        } else {
            &self.a
        }
    }
}

/// A port of an interior vertex: one of its incident edges.
///
/// Canonical order is the in-tail first, then interior neighbours by
/// ascending label, then the out-tail last.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Port {
    TailIn,
    Neighbor(String),
    TailOut,
}

impl fmt::Display for Port {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Port::TailIn => f.write_str("tail_in"),
            Port::Neighbor(l) => f.write_str(l),
            Port::TailOut => f.write_str("tail_out"),
        }
    }
}

/// Finite graph plus the two tails. Immutable once built.
#[derive(Debug, Clone)]
pub struct TailedGraph {
    vertices: Vec<VertexSpec>,
    edges: Vec<EdgeSpec>,
    entry: String,
    exit: String,
    by_label: BTreeMap<String, usize>,
}

impl PartialEq for TailedGraph {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices
            && self.edges == other.edges
            && self.entry == other.entry
            && self.exit == other.exit
    }
}

pub(crate) fn valid_label(label: &str) -> bool {
    !label.is_empty()
        && !label.starts_with(TAIL_PREFIX)
        && label
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

impl TailedGraph {
    /// Builds and validates a tailed graph.
    ///
    /// `entry` and `exit` may coincide, in which case that vertex carries
    /// both tails.
    pub fn new(
        vertices: Vec<VertexSpec>,
        edges: Vec<EdgeSpec>,
        entry: impl Into<String>,
        exit: impl Into<String>,
    ) -> Result<Self, GraphError> {
        let entry = entry.into();
        let exit = exit.into();
        let mut by_label = BTreeMap::new();
        for (i, v) in vertices.iter().enumerate() {
            if !valid_label(&v.label) {
                return Err(GraphError::InvalidLabel(v.label.clone()));
            }
            if by_label.insert(v.label.clone(), i).is_some() {
                return Err(GraphError::DuplicateVertex(v.label.clone()));
            }
        }
        let mut seen = BTreeSet::new();
        for e in &edges {
            for end in [&e.a, &e.b] {
                if !by_label.contains_key(end) {
                    return Err(GraphError::UnknownVertex(end.clone()));
                }
            }
            if e.a == e.b {
                return Err(GraphError::SelfLoop(e.a.clone()));
            }
            if !seen.insert(e.key()) {
                let (a, b) = e.key();
                return Err(GraphError::DuplicateEdge(a, b));
            }
            for (endpoint, phi) in &e.endpoint_phase {
                if endpoint != &e.a && endpoint != &e.b {
                    return Err(GraphError::PhaseEndpoint {
                        a: e.a.clone(),
                        b: e.b.clone(),
                        endpoint: endpoint.clone(),
                    });
                }
                if !phi.is_finite() {
                    return Err(GraphError::NonFinite(format!("phase on edge {}--{}", e.a, e.b)));
                }
            }
        }
        for end in [&entry, &exit] {
            if !by_label.contains_key(end) {
                return Err(GraphError::UnknownVertex(end.clone()));
            }
        }
        let graph = TailedGraph {
            vertices,
            edges,
            entry,
            exit,
            by_label,
        };
        for v in &graph.vertices {
            v.kind.validate(&v.label)?;
            let actual = graph.ports(&v.label).len();
            let expected = v.kind.dimension();
            if actual != expected {
                return Err(GraphError::DegreeMismatch {
                    vertex: v.label.clone(),
                    expected,
                    actual,
                });
            }
        }
        Ok(graph)
    }

    pub fn vertices(&self) -> &[VertexSpec] {
        &self.vertices
    }

    pub fn edges(&self) -> &[EdgeSpec] {
        &self.edges
    }

    pub fn entry(&self) -> &str {
        &self.entry
    }

    pub fn exit(&self) -> &str {
        &self.exit
    }

    pub fn vertex(&self, label: &str) -> Option<&VertexSpec> {
        self.by_label.get(label).map(|&i| &self.vertices[i])
    }

    /// Interior labels in ascending order.
    pub fn sorted_labels(&self) -> Vec<String> {
        self.by_label.keys().cloned().collect()
    }

    /// Canonical port list of an interior vertex, tails included.
    pub fn ports(&self, label: &str) -> Vec<Port> {
        let mut ports: Vec<Port> = self
            .edges
            .iter()
            .filter(|e| e.a == label || e.b == label)
            .map(|e| Port::Neighbor(e.other(label).to_string()))
            .collect();
        if label == self.entry {
            ports.push(Port::TailIn);
        }
        if label == self.exit {
            ports.push(Port::TailOut);
        }
        ports.sort();
        ports
    }

    fn endpoint_phase(&self, vertex: &str, neighbor: &str) -> f64 {
        self.edges
            .iter()
            .find(|e| (e.a == vertex && e.b == neighbor) || (e.b == vertex && e.a == neighbor))
            .and_then(|e| e.endpoint_phase.get(vertex).copied())
            .unwrap_or(0.0)
    }

    /// Local unitary of an interior vertex over its canonical ports, with
    /// edge phase shifters folded in.
    pub fn local_block(&self, label: &str) -> Option<(Vec<Port>, DMatrix<Complex64>)> {
        let spec = self.vertex(label)?;
        let ports = self.ports(label);
        let mut m = spec.kind.local_matrix();
        let phases: Vec<Complex64> = ports
            .iter()
            .map(|p| match p {
                Port::Neighbor(n) => Complex64::from_polar(1.0, self.endpoint_phase(label, n)),
                _ => Complex64::new(1.0, 0.0),
            })
            .collect();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                m[(i, j)] *= phases[i] * phases[j];
            }
        }
        Some((ports, m))
    }

    /// Human-readable problems that do not make the graph invalid: interior
    /// vertices unreachable from the entry, or an unreachable exit.
    pub fn warnings(&self) -> Vec<String> {
        let mut adjacency: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for e in &self.edges {
            adjacency.entry(&e.a).or_default().push(&e.b);
            adjacency.entry(&e.b).or_default().push(&e.a);
        }
        let mut reached = BTreeSet::new();
        let mut queue = VecDeque::from([self.entry.as_str()]);
        reached.insert(self.entry.as_str());
        while let Some(v) = queue.pop_front() {
            for &n in adjacency.get(v).into_iter().flatten() {
                if reached.insert(n) {
                    queue.push_back(n);
                }
            }
        }
        let mut out = Vec::new();
        if !reached.contains(self.exit.as_str()) {
            out.push(format!(
                "exit vertex `{}` is not reachable from entry `{}`",
                self.exit, self.entry
            ));
        }
        for v in &self.vertices {
            if !reached.contains(v.label.as_str()) && v.label != self.exit {
                out.push(format!(
                    "vertex `{}` is not reachable from entry `{}`",
                    v.label, self.entry
                ));
            }
        }
        out
    }
}

/// A vertex of the truncated tailed graph.
///
/// `Interior(i)` indexes the sorted interior labels; `InTail(d)` and
/// `OutTail(d)` are the tail vertices at distance `d >= 1` from the entry and
/// exit vertices respectively.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Interior(usize),
    InTail(usize),
    OutTail(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OrientedEdge {
    pub from: Node,
    pub to: Node,
}

impl OrientedEdge {
    pub fn new(from: Node, to: Node) -> Self {
        OrientedEdge { from, to }
    }

    pub fn reversed(self) -> Self {
        OrientedEdge {
            from: self.to,
            to: self.from,
        }
    }
}

/// Side from which a wave is injected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Incoming along the in-tail, towards the entry vertex.
    Left,
    /// Incoming along the out-tail, towards the exit vertex.
    Right,
}

/// Ordered oriented-edge basis of a truncated tailed graph.
///
/// Order: interior oriented edges by `(from, to)` label, then in-tail edges by
/// decreasing distance, then out-tail edges by increasing distance. Within a
/// tail edge the inward orientation of the in-tail and the outward orientation
/// of the out-tail come first, so the basis reads left to right.
#[derive(Debug, Clone)]
pub struct EdgeBasis {
    labels: Vec<String>,
    entry: usize,
    exit: usize,
    tail_length: usize,
    interior_len: usize,
    edges: Vec<OrientedEdge>,
    index: HashMap<OrientedEdge, usize>,
}

impl PartialEq for EdgeBasis {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels
            && self.entry == other.entry
            && self.exit == other.exit
            && self.tail_length == other.tail_length
            && self.edges == other.edges
    }
}

/// Cuts a finite window of `tail_length` edges out of each tail. The
/// outermost tail vertex reflects perfectly, so the walk on the window is
/// exactly unitary.
///
/// # Panics
///
/// If `tail_length` is zero.
pub fn truncate(graph: &TailedGraph, tail_length: usize) -> EdgeBasis {
    assert!(tail_length >= 1, "tail window must hold at least one edge");
    let labels = graph.sorted_labels();
    let pos = |l: &str| labels.binary_search_by(|x| x.as_str().cmp(l)).expect("known label");
    let entry = pos(graph.entry());
    let exit = pos(graph.exit());

    let mut edges: Vec<OrientedEdge> = graph
        .edges()
        .iter()
        .flat_map(|e| {
            let (a, b) = (Node::Interior(pos(&e.a)), Node::Interior(pos(&e.b)));
            [OrientedEdge::new(a, b), OrientedEdge::new(b, a)]
        })
        .collect();
    edges.sort();
    let interior_len = edges.len();

    let in_node = |d: usize| if d == 0 { Node::Interior(entry) } else { Node::InTail(d) };
    let out_node = |d: usize| if d == 0 { Node::Interior(exit) } else { Node::OutTail(d) };
    for d in (1..=tail_length).rev() {
        edges.push(OrientedEdge::new(in_node(d), in_node(d - 1)));
        edges.push(OrientedEdge::new(in_node(d - 1), in_node(d)));
    }
    for d in 1..=tail_length {
        edges.push(OrientedEdge::new(out_node(d - 1), out_node(d)));
        edges.push(OrientedEdge::new(out_node(d), out_node(d - 1)));
    }
    let index = edges.iter().enumerate().map(|(i, e)| (*e, i)).collect();
    EdgeBasis {
        labels,
        entry,
        exit,
        tail_length,
        interior_len,
        edges,
        index,
    }
}

impl EdgeBasis {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Number of interior oriented edges (twice the interior edge count).
    /// These occupy the first positions of the basis.
    pub fn interior_len(&self) -> usize {
        self.interior_len
    }

    pub fn tail_length(&self) -> usize {
        self.tail_length
    }

    pub fn edges(&self) -> &[OrientedEdge] {
        &self.edges
    }

    pub fn edge(&self, i: usize) -> OrientedEdge {
        self.edges[i]
    }

    pub fn index_of(&self, edge: &OrientedEdge) -> Option<usize> {
        self.index.get(edge).copied()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn entry_node(&self) -> Node {
        Node::Interior(self.entry)
    }

    pub fn exit_node(&self) -> Node {
        Node::Interior(self.exit)
    }

    pub fn interior_node(&self, label: &str) -> Option<Node> {
        self.labels
            .binary_search_by(|x| x.as_str().cmp(label))
            .ok()
            .map(Node::Interior)
    }

    pub fn node_label(&self, node: Node) -> String {
        match node {
            Node::Interior(i) => self.labels[i].clone(),
            Node::InTail(d) => format!("tail_in:{d}"),
            Node::OutTail(d) => format!("tail_out:{d}"),
        }
    }

    /// Inverse of [`EdgeBasis::node_label`].
    pub fn parse_node(&self, text: &str) -> Option<Node> {
        let tail = |prefix: &str| {
            text.strip_prefix(prefix)
                .and_then(|d| d.parse::<usize>().ok())
                .filter(|&d| d >= 1)
        };
        if let Some(d) = tail("tail_in:") {
            return Some(Node::InTail(d));
        }
        if let Some(d) = tail("tail_out:") {
            return Some(Node::OutTail(d));
        }
        self.interior_node(text)
    }

    /// Parses `"A,B"` into the oriented edge `A -> B` of this basis.
    pub fn parse_edge(&self, text: &str) -> Option<OrientedEdge> {
        let (a, b) = text.split_once(',')?;
        let edge = OrientedEdge::new(self.parse_node(a.trim())?, self.parse_node(b.trim())?);
        self.index_of(&edge).map(|_| edge)
    }

    pub fn edge_label(&self, edge: OrientedEdge) -> String {
        format!("{},{}", self.node_label(edge.from), self.node_label(edge.to))
    }

    /// Node at distance `d` along the in-tail (`d = 0` is the entry vertex).
    pub fn in_tail(&self, d: usize) -> Node {
        if d == 0 {
            self.entry_node()
        } else {
            Node::InTail(d)
        }
    }

    /// Node at distance `d` along the out-tail (`d = 0` is the exit vertex).
    pub fn out_tail(&self, d: usize) -> Node {
        if d == 0 {
            self.exit_node()
        } else {
            Node::OutTail(d)
        }
    }

    /// Tail edge a wave enters the graph along: `|-1,0>` for `Left`.
    pub fn injection_edge(&self, direction: Direction) -> OrientedEdge {
        match direction {
            Direction::Left => OrientedEdge::new(self.in_tail(1), self.in_tail(0)),
            Direction::Right => OrientedEdge::new(self.out_tail(1), self.out_tail(0)),
        }
    }

    /// First outgoing edge on the injection side: `|0,-1>` for `Left`.
    pub fn reflection_edge(&self, direction: Direction) -> OrientedEdge {
        self.injection_edge(direction).reversed()
    }

    /// First outgoing edge on the far side: `|j,j+1>` for `Left`.
    pub fn transmission_edge(&self, direction: Direction) -> OrientedEdge {
        match direction {
            Direction::Left => OrientedEdge::new(self.out_tail(0), self.out_tail(1)),
            Direction::Right => OrientedEdge::new(self.in_tail(0), self.in_tail(1)),
        }
    }

    /// Distance of the outer endpoint of a tail edge from the interior; zero
    /// for interior edges.
    pub fn tail_distance(&self, edge: OrientedEdge) -> usize {
        let d = |n: Node| match n {
            Node::Interior(_) => 0,
            Node::InTail(d) | Node::OutTail(d) => d,
        };
        d(edge.from).max(d(edge.to))
    }

    /// True for tail edges oriented away from the interior graph.
    pub fn is_outgoing_tail_edge(&self, edge: OrientedEdge) -> bool {
        match (edge.from, edge.to) {
            (_, Node::InTail(d)) => edge.from == self.in_tail(d - 1),
            (_, Node::OutTail(d)) => edge.from == self.out_tail(d - 1),
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diamond(phi: f64) -> TailedGraph {
        TailedGraph::new(
            vec![
                VertexSpec::new("0", VertexKind::Grover { degree: 3 }),
                VertexSpec::new("1A", VertexKind::Free),
                VertexSpec::new(
                    "1B",
                    VertexKind::Phase {
                        phi,
                        inner: Box::new(VertexKind::Free),
                    },
                ),
                VertexSpec::new("2", VertexKind::Grover { degree: 3 }),
            ],
            vec![
                EdgeSpec::new("0", "1A"),
                EdgeSpec::new("0", "1B"),
                EdgeSpec::new("1A", "2"),
                EdgeSpec::new("1B", "2"),
            ],
            "0",
            "2",
        )
        .unwrap()
    }

    #[test]
    fn grover_examples() {
        let (r, t) = grover_coefficients(3).unwrap();
        assert_eq!((r.re, t.re), (-1.0 / 3.0, 2.0 / 3.0));
        let (r, t) = grover_coefficients(2).unwrap();
        assert_eq!((r.re, t.re), (0.0, 1.0));
        assert_eq!(grover_coefficients(0), Err(GraphError::ZeroDegree));
    }

    #[test]
    fn grover_four_satisfies_both_conditions() {
        let (r, t) = grover_coefficients(4).unwrap();
        assert_eq!((r.re, t.re), (-0.5, 0.5));
        let n = 4.0;
        assert!(((n - 1.0) * t.norm_sqr() + r.norm_sqr() - 1.0).abs() < 1e-15);
        assert!(((n - 2.0) * t.norm_sqr() + r.conj() * t + t.conj() * r).norm() < 1e-15);
    }

    #[test]
    fn diamond_basis_sizes() {
        let g = diamond(0.0);
        let basis = truncate(&g, 5);
        assert_eq!(basis.len(), 28);
        assert_eq!(basis.interior_len(), 8);
        assert_eq!(truncate(&g, 1).len(), 2 * 4 + 4);
    }

    #[test]
    fn basis_ordering() {
        let g = diamond(0.0);
        let b = truncate(&g, 2);
        let names: Vec<String> = b.edges().iter().map(|e| b.edge_label(*e)).collect();
        assert_eq!(
            names,
            [
                "0,1A",
                "0,1B",
                "1A,0",
                "1A,2",
                "1B,0",
                "1B,2",
                "2,1A",
                "2,1B",
                "tail_in:2,tail_in:1",
                "tail_in:1,tail_in:2",
                "tail_in:1,0",
                "0,tail_in:1",
                "2,tail_out:1",
                "tail_out:1,2",
                "tail_out:1,tail_out:2",
                "tail_out:2,tail_out:1",
            ]
        );
        assert_eq!(b.edge_label(b.injection_edge(Direction::Left)), "tail_in:1,0");
        assert_eq!(b.edge_label(b.transmission_edge(Direction::Left)), "2,tail_out:1");
        assert_eq!(b.edge_label(b.transmission_edge(Direction::Right)), "0,tail_in:1");
        assert_eq!(truncate(&g, 2), b);
    }

    #[test]
    fn outgoing_tail_edges() {
        let b = truncate(&diamond(0.0), 3);
        let e = b.parse_edge("2,tail_out:1").unwrap();
        assert!(b.is_outgoing_tail_edge(e));
        assert!(!b.is_outgoing_tail_edge(e.reversed()));
        assert!(b.is_outgoing_tail_edge(b.parse_edge("tail_in:1,tail_in:2").unwrap()));
        assert!(!b.is_outgoing_tail_edge(b.parse_edge("0,1A").unwrap()));
        assert_eq!(b.tail_distance(b.parse_edge("tail_out:2,tail_out:3").unwrap()), 3);
        assert_eq!(b.tail_distance(b.parse_edge("0,1A").unwrap()), 0);
    }

    #[test]
    fn degree_mismatch() {
        let err = TailedGraph::new(
            vec![
                VertexSpec::new("a", VertexKind::Grover { degree: 3 }),
                VertexSpec::new("b", VertexKind::Grover { degree: 2 }),
            ],
            vec![EdgeSpec::new("a", "b")],
            "a",
            "b",
        )
        .unwrap_err();
        assert_eq!(
            err,
            GraphError::DegreeMismatch {
                vertex: "a".into(),
                expected: 3,
                actual: 2
            }
        );
    }

    #[test]
    fn single_pass_through_vertex() {
        let g = TailedGraph::new(
            vec![VertexSpec::new("x", VertexKind::Grover { degree: 2 })],
            vec![],
            "x",
            "x",
        )
        .unwrap();
        assert_eq!(g.ports("x"), vec![Port::TailIn, Port::TailOut]);
        let (_, m) = g.local_block("x").unwrap();
        assert_eq!(m[(1, 0)], Complex64::new(1.0, 0.0));
        assert_eq!(m[(0, 0)], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn two_port_norm_checked() {
        let err = TailedGraph::new(
            vec![VertexSpec::new(
                "x",
                VertexKind::TwoPort {
                    t: Complex64::new(0.8, 0.0),
                    r: Complex64::new(0.5, 0.0),
                },
            )],
            vec![],
            "x",
            "x",
        )
        .unwrap_err();
        assert!(matches!(err, GraphError::TwoPortNorm { .. }));
    }

    #[test]
    fn custom_must_be_unitary() {
        let m = DMatrix::from_element(2, 2, Complex64::new(0.5, 0.0));
        let err = TailedGraph::new(
            vec![VertexSpec::new("x", VertexKind::Custom { matrix: m })],
            vec![],
            "x",
            "x",
        )
        .unwrap_err();
        assert!(matches!(err, GraphError::NonUnitary { .. }));
    }

    #[test]
    fn endpoint_phase_matches_shifter_rule() {
        // Two-port vertex `j` between `a` (left) and `c` (right) with a
        // shifter just before `j` on the left edge.
        let t = Complex64::new(0.6, 0.0);
        let r = Complex64::new(0.0, 0.8);
        let phi = 0.7;
        let g = TailedGraph::new(
            vec![
                VertexSpec::new("a", VertexKind::Free),
                VertexSpec::new("j", VertexKind::TwoPort { t, r }),
                VertexSpec::new("k", VertexKind::Free),
            ],
            vec![EdgeSpec::new("a", "j").with_phase("j", phi), EdgeSpec::new("j", "k")],
            "a",
            "k",
        )
        .unwrap();
        let (ports, m) = g.local_block("j").unwrap();
        assert_eq!(ports, vec![Port::Neighbor("a".into()), Port::Neighbor("k".into())]);
        let e = |x: f64| Complex64::from_polar(1.0, x);
        // from the left: t e^{i phi} forward, r e^{2 i phi} back
        assert!((m[(1, 0)] - t * e(phi)).norm() < 1e-15);
        assert!((m[(0, 0)] - r * e(2.0 * phi)).norm() < 1e-15);
        // from the right: -r* back, t* e^{i phi} forward
        assert!((m[(1, 1)] + r.conj()).norm() < 1e-15);
        assert!((m[(0, 1)] - t.conj() * e(phi)).norm() < 1e-15);
    }

    #[test]
    fn warns_about_unreachable_vertices() {
        let g = TailedGraph::new(
            vec![
                VertexSpec::new("a", VertexKind::Grover { degree: 2 }),
                VertexSpec::new("b", VertexKind::Free),
                VertexSpec::new("c", VertexKind::Free),
            ],
            vec![EdgeSpec::new("b", "c").with_phase("b", 0.1)],
            "a",
            "a",
        );
        // b and c each have degree 1 but Free needs 2
        assert!(g.is_err());
        let g = TailedGraph::new(
            vec![
                VertexSpec::new("a", VertexKind::Grover { degree: 2 }),
                VertexSpec::new("b", VertexKind::Grover { degree: 1 }),
                VertexSpec::new("c", VertexKind::Grover { degree: 1 }),
            ],
            vec![EdgeSpec::new("b", "c")],
            "a",
            "a",
        )
        .unwrap();
        assert_eq!(g.warnings().len(), 2);
    }
}
