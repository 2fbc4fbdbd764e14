//! Discrete-time quantum walks on the oriented edges of a finite graph with
//! two semi-infinite tails, and the scattering data of that graph.
//!
//! The crate is organised bottom-up:
//!
//! * [`graph`]: vertex rules, tailed graphs, the edge basis, file format.
//! * [`operator`]: the one-step unitary and walk states.
//! * [`walk`]: direct time-domain simulation, monitored walks.
//! * [`scattering`]: transmission/reflection amplitudes, bound states,
//!   Taylor coefficients and hitting statistics.
//! * [`symmetry`]: time reversal.
//! * [`oracles`]: closed-form reference results and graph builders.

pub mod graph;
pub mod linalg;
pub mod operator;
pub mod oracles;
pub mod scattering;
pub mod symmetry;
pub mod walk;

pub use num_complex::Complex64;

pub use graph::{
    grover_coefficients, parse_graph, serialize_graph, truncate, Direction, EdgeBasis, EdgeSpec, GraphError, Node,
    OrientedEdge, Port, TailedGraph, VertexKind, VertexSpec,
};
pub use operator::{assemble, check_unitarity, OperatorError, StepOperator, WalkState};
pub use scattering::{
    amplitudes_at, build_problem, find_bound_states, hitting_statistics, s_matrix, taylor_coefficients,
    AmplitudeSeries, BoundState, HittingStatistics, ScatteringError, ScatteringProblem,
};
pub use symmetry::{check_invariance, time_reverse, verify_transmission_symmetry, TimeReversalReport};
pub use walk::{distribution, evolve, first_arrival_direct, monitored_walk, MonitorRecord, WalkError};
