//! Time reversal on oriented edges.
//!
//! `T` maps amplitude `a` on `|A,B>` to `a*` on `|B,A>`. A walk is invariant
//! when `T U T = U^dagger`, which holds exactly when every local scattering
//! matrix is symmetric.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::graph::TailedGraph;
use crate::operator::{StepOperator, WalkState};
use crate::scattering::{BoundState, SMatrixSolver, ScatteringError, ScatteringProblem};

type C = Complex64;

/// Largest block asymmetry accepted as time-reversal invariant.
pub const INVARIANCE_TOL: f64 = 1e-12;
/// Tolerance on the unitarity identities checked alongside `t_l = t_r`.
pub const IDENTITY_TOL: f64 = 1e-10;
/// Number of circle points used by [`verify_transmission_symmetry`].
pub const SYMMETRY_SAMPLES: usize = 64;

#[derive(Debug, Error, PartialEq)]
pub enum SymmetryError {
    #[error("walk is not time-reversal invariant (block asymmetry {violation:e})")]
    NotInvariant { violation: f64 },
    #[error("S-matrix identity violated by {residual:e} at theta = {theta}")]
    IdentityViolated { theta: f64, residual: f64 },
    #[error(transparent)]
    Scattering(#[from] ScatteringError),
    #[error(transparent)]
    Operator(#[from] crate::operator::OperatorError),
}

/// Location of the largest asymmetry `|M[k,l] - M[l,k]|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub vertex: String,
    /// Ports `(k, l)` as neighbour labels.
    pub ports: (String, String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeReversalReport {
    pub invariant: bool,
    pub worst_violation: f64,
    pub witness: Option<Witness>,
}

/// `T psi`: amplitude on `(A,B)` becomes the conjugate of the amplitude on
/// `(B,A)`.
pub fn time_reverse(psi: &WalkState) -> WalkState {
    let basis = psi.basis();
    let amps = psi.amplitudes();
    let out = basis
        .edges()
        .iter()
        .map(|e| {
            let j = basis.index_of(&e.reversed()).expect("basis holds both orientations");
            amps[j].conj()
        })
        .collect();
    WalkState::from_parts(basis.clone(), out, psi.is_normalized())
}

/// Reverses an interior vector of a scattering problem.
pub fn time_reverse_interior(problem: &ScatteringProblem, v: &DVector<C>) -> DVector<C> {
    let basis = problem.basis();
    DVector::from_fn(v.len(), |i, _| {
        let j = basis.index_of(&basis.edge(i).reversed()).expect("interior edge");
        v[j].conj()
    })
}

/// Blockwise symmetry test of every local scattering matrix.
pub fn check_invariance(op: &StepOperator) -> TimeReversalReport {
    let basis = op.basis();
    let mut worst = 0.0;
    let mut witness = None;
    for b in op.blocks() {
        let m = &b.matrix;
        for k in 0..m.nrows() {
            for l in k + 1..m.ncols() {
                let v = (m[(k, l)] - m[(l, k)]).norm();
                if v > worst {
                    worst = v;
                    witness = Some(Witness {
                        vertex: basis.node_label(b.node),
                        ports: (basis.node_label(b.ports[k]), basis.node_label(b.ports[l])),
                    });
                }
            }
        }
    }
    TimeReversalReport {
        invariant: worst < INVARIANCE_TOL,
        worst_violation: worst,
        witness,
    }
}

/// `max |T U T - U^dagger|` on the assembled operator. Entrywise the
/// condition reads `U[i, c] = U[rev c, rev i]`.
pub fn reversal_defect(op: &StepOperator) -> f64 {
    let basis = op.basis();
    let rev: Vec<usize> = basis
        .edges()
        .iter()
        .map(|e| basis.index_of(&e.reversed()).expect("both orientations"))
        .collect();
    let mut worst: f64 = 0.0;
    for c in 0..op.dim() {
        for (i, v) in op.column(c) {
            worst = worst.max((v - op.entry(rev[c], rev[i])).norm());
        }
    }
    worst
}

#[derive(Debug, Clone, Serialize)]
pub struct TransmissionSymmetry {
    pub thetas: Vec<f64>,
    #[serde(skip)]
    pub t_left: Vec<C>,
    #[serde(skip)]
    pub t_right: Vec<C>,
    pub max_diff: f64,
    /// Largest residual of `|r_l|^2 + t_r t_l* = 1` and
    /// `r_l t_r* + t_r r_r* = 0`.
    pub identity_residual: f64,
}

/// Solves both injection directions at evenly spaced `theta` and compares the
/// transmission amplitudes.
pub fn verify_transmission_symmetry(graph: &TailedGraph) -> Result<TransmissionSymmetry, SymmetryError> {
    let op = StepOperator::for_graph(graph, 1)?;
    let report = check_invariance(&op);
    if !report.invariant {
        return Err(SymmetryError::NotInvariant {
            violation: report.worst_violation,
        });
    }
    let solver = SMatrixSolver::new(graph)?;
    let mut out = TransmissionSymmetry {
        thetas: Vec::with_capacity(SYMMETRY_SAMPLES),
        t_left: Vec::with_capacity(SYMMETRY_SAMPLES),
        t_right: Vec::with_capacity(SYMMETRY_SAMPLES),
        max_diff: 0.0,
        identity_residual: 0.0,
    };
    for k in 0..SYMMETRY_SAMPLES {
        let theta = std::f64::consts::TAU * (k as f64 + 0.5) / SYMMETRY_SAMPLES as f64;
        let s = solver.at(theta)?;
        let (r_l, t_r, t_l, r_r) = (s[(0, 0)], s[(0, 1)], s[(1, 0)], s[(1, 1)]);
        let first = (r_l.norm_sqr() + t_r * t_l.conj() - 1.0).norm();
        let second = (r_l * t_r.conj() + t_r * r_r.conj()).norm();
        let residual = first.max(second);
        if residual > IDENTITY_TOL {
            return Err(SymmetryError::IdentityViolated { theta, residual });
        }
        out.identity_residual = out.identity_residual.max(residual);
        out.max_diff = out.max_diff.max((t_l - t_r).norm());
        out.thetas.push(theta);
        out.t_left.push(t_l);
        out.t_right.push(t_r);
    }
    Ok(out)
}

/// How a bound state behaves under time reversal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundReversal {
    /// `T u` is a phase times `u`.
    SelfConjugate,
    /// `T u` is a different vector in the same eigenspace, so the eigenvalue
    /// is degenerate.
    Degenerate,
    /// `T u` is not an eigenvector with the same eigenvalue.
    Broken,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReversalReport {
    /// `|G T u - lambda T u|`.
    pub residual: f64,
    /// `|<u|T u>|`.
    pub overlap: f64,
    pub kind: BoundReversal,
}

/// Classifies each bound state of `problem` under time reversal.
pub fn classify_bound_states(problem: &ScatteringProblem) -> Vec<BoundReversalReport> {
    problem.bound_states().iter().map(|b| classify(problem, b)).collect()
}

fn classify(problem: &ScatteringProblem, b: &BoundState) -> BoundReversalReport {
    let tu = time_reverse_interior(problem, &b.vector);
    let residual = (problem.g() * &tu - &tu * b.eigenvalue).norm();
    let overlap = b.vector.dotc(&tu).norm();
    let kind = if residual > 1e-8 {
        BoundReversal::Broken
    } else if (overlap - 1.0).abs() < 1e-8 {
        BoundReversal::SelfConjugate
    } else {
        BoundReversal::Degenerate
    };
    BoundReversalReport {
        residual,
        overlap,
        kind,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Direction;
    use crate::graph::{EdgeSpec, VertexKind, VertexSpec};
    use crate::oracles::{build_diamond, build_line};
    use crate::scattering::build_problem;
    use nalgebra::DMatrix;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, PI};

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn reverses_edges_antilinearly() {
        let op = StepOperator::for_graph(&build_diamond(0.0), 2).unwrap();
        let b = op.basis().clone();
        let e = b.parse_edge("0,1A").unwrap();
        let mut amps = vec![c(0.0, 0.0); b.len()];
        amps[b.index_of(&e).unwrap()] = c(0.0, 1.0);
        let psi = WalkState::from_amplitudes(b.clone(), amps).unwrap();
        let t = time_reverse(&psi);
        assert_eq!(t.amplitude(&e.reversed()), c(0.0, -1.0));
        assert_eq!(t.amplitude(&e), c(0.0, 0.0));
        let mixed: Vec<C> = (0..b.len()).map(|i| c(i as f64, 1.0 - i as f64 * 0.5)).collect();
        let psi = WalkState::from_amplitudes(b, mixed).unwrap();
        assert_eq!(time_reverse(&time_reverse(&psi)).amplitudes(), psi.amplitudes());
    }

    #[test]
    fn grover_and_phases_are_invariant() {
        for phi in [0.0, 0.8, PI] {
            let op = StepOperator::for_graph(&build_diamond(phi), 3).unwrap();
            let r = check_invariance(&op);
            assert!(r.invariant);
            assert!(reversal_defect(&op) < 1e-12);
        }
    }

    #[test]
    fn complex_two_port_breaks_invariance() {
        let t = C::from_polar(FRAC_1_SQRT_2, FRAC_PI_4);
        let g = build_line(t, c(FRAC_1_SQRT_2, 0.0), 2).unwrap();
        let op = StepOperator::for_graph(&g, 2).unwrap();
        let r = check_invariance(&op);
        assert!(!r.invariant);
        assert!((r.worst_violation - (t - t.conj()).norm()).abs() < 1e-15);
        assert!(r.witness.unwrap().vertex.starts_with('n'));
        assert!(reversal_defect(&op) > 0.1);
        assert!(matches!(
            verify_transmission_symmetry(&g),
            Err(SymmetryError::NotInvariant { .. })
        ));
    }

    #[test]
    fn symmetric_custom_matrix_is_invariant() {
        // Symmetric unitary: (1/sqrt 2) [[1, i], [i, 1]].
        let s = FRAC_1_SQRT_2;
        let m = DMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(0.0, s), c(0.0, s), c(s, 0.0)]);
        let g = TailedGraph::new(
            vec![VertexSpec::new("a", VertexKind::Custom { matrix: m })],
            vec![],
            "a",
            "a",
        )
        .unwrap();
        let op = StepOperator::for_graph(&g, 1).unwrap();
        assert!(check_invariance(&op).invariant);
    }

    #[test]
    fn diamond_transmission_symmetry() {
        for phi in [0.0, 0.5, 2.0, PI] {
            let r = verify_transmission_symmetry(&build_diamond(phi)).unwrap();
            assert!(r.max_diff < 1e-10, "phi={phi}");
            assert_eq!(r.thetas.len(), SYMMETRY_SAMPLES);
        }
    }

    #[test]
    fn mirror_symmetric_graph_reflects_equally() {
        let g = TailedGraph::new(
            vec![
                VertexSpec::new("a", VertexKind::Grover { degree: 3 }),
                VertexSpec::new("b", VertexKind::Grover { degree: 3 }),
                VertexSpec::new("m", VertexKind::Free),
                VertexSpec::new("n", VertexKind::Free),
            ],
            vec![
                EdgeSpec::new("a", "m"),
                EdgeSpec::new("m", "b"),
                EdgeSpec::new("a", "n").with_phase("a", 0.4),
                EdgeSpec::new("n", "b").with_phase("b", 0.4),
            ],
            "a",
            "b",
        )
        .unwrap();
        let solver = SMatrixSolver::new(&g).unwrap();
        for k in 0..16 {
            let s = solver.at(0.37 * k as f64).unwrap();
            assert!((s[(0, 0)] - s[(1, 1)]).norm() < 1e-12);
        }
    }

    #[test]
    fn diamond_bound_states_reverse_into_bound_states() {
        let p = build_problem(&build_diamond(0.0), Direction::Left).unwrap();
        let reports = classify_bound_states(&p);
        assert_eq!(reports.len(), 4);
        for r in &reports {
            assert!(r.residual < 1e-8);
            assert_ne!(r.kind, BoundReversal::Broken);
        }
    }
}
