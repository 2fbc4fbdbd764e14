//! Time-domain simulation on a truncated window: plain evolution, monitored
//! evolution with a projective measurement after every step, and first-arrival
//! probabilities read off directly from `U^n`.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::graph::{EdgeBasis, OrientedEdge, TailedGraph};
use crate::operator::{norm, same_basis, OperatorError, StepOperator, WalkState};

/// Survival probability below which a monitored walk stops evolving.
pub const SURVIVAL_FLOOR: f64 = 1e-300;

#[derive(Debug, Error, PartialEq)]
pub enum WalkError {
    #[error("tail window of {actual} edges is too short; {required} needed for this walk")]
    WindowTooSmall { required: usize, actual: usize },
    #[error("walk state and operator live on different edge bases")]
    BasisMismatch,
    #[error("monitored edge set is empty")]
    EmptyMonitor,
    #[error("edge `{0}` is not an outgoing tail edge")]
    NotOnTail(String),
    #[error("edge `{0}` is not in the basis")]
    UnknownEdge(String),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// State of a monitored walk after step `n`, conditioned on no detection.
#[derive(Debug, Clone)]
pub struct MonitorRecord {
    pub n: usize,
    /// Probability of no detection in steps `1..=n`.
    pub p_survive: f64,
    /// Probability of first detection at step `n`.
    pub q_arrive: f64,
    pub state: WalkState,
}

/// Tail window that keeps an `n`-step walk from `psi` clear of the reflecting
/// ends.
pub fn required_tail_length(basis: &EdgeBasis, psi: &[Complex64], n: usize) -> usize {
    let reach = psi
        .iter()
        .enumerate()
        .filter(|(_, a)| a.norm_sqr() > 0.0)
        .map(|(i, _)| basis.tail_distance(basis.edge(i)))
        .max()
        .unwrap_or(0);
    reach + n + 1
}

/// Operator on a window sized for `n` steps from the in-tail edge `|-1,0>`.
pub fn window_for(graph: &TailedGraph, n: usize) -> Result<StepOperator, WalkError> {
    Ok(StepOperator::for_graph(graph, n + 2)?)
}

fn check(op: &StepOperator, psi: &WalkState, n: usize) -> Result<(), WalkError> {
    if !same_basis(op.basis(), psi.basis()) {
        return Err(WalkError::BasisMismatch);
    }
    let required = required_tail_length(op.basis(), psi.amplitudes(), n);
    let actual = op.basis().tail_length();
    if actual < required {
        return Err(WalkError::WindowTooSmall { required, actual });
    }
    Ok(())
}

/// `U^n psi0`.
pub fn evolve(op: &StepOperator, psi0: &WalkState, n: usize) -> Result<WalkState, WalkError> {
    check(op, psi0, n)?;
    let normalized = psi0.is_normalized();
    let mut v = psi0.amplitudes().to_vec();
    for _ in 0..n {
        v = op.apply_slice(&v);
    }
    Ok(WalkState::from_parts(psi0.basis().clone(), v, normalized))
}

/// Measures after every step whether the walker sits on any of `monitored`
/// (both orientations of each listed edge). Returns records for steps
/// `1..=n_max`.
pub fn monitored_walk(
    op: &StepOperator,
    psi0: &WalkState,
    monitored: &[OrientedEdge],
    n_max: usize,
) -> Result<Vec<MonitorRecord>, WalkError> {
    if monitored.is_empty() {
        return Err(WalkError::EmptyMonitor);
    }
    check(op, psi0, n_max)?;
    let basis = op.basis().clone();
    let mut projected = Vec::new();
    for e in monitored {
        for edge in [*e, e.reversed()] {
            let i = basis
                .index_of(&edge)
                .ok_or_else(|| WalkError::UnknownEdge(basis.edge_label(edge)))?;
            if !projected.contains(&i) {
                projected.push(i);
            }
        }
    }

    // chi_m = [(I - P) U]^m psi0, unnormalized; p(m) = |chi_m|^2.
    let mut chi = psi0.amplitudes().to_vec();
    let mut p = norm(&chi).powi(2);
    let mut records = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let mut q = 0.0;
        if p >= SURVIVAL_FLOOR {
            chi = op.apply_slice(&chi);
            for &i in &projected {
                q += chi[i].norm_sqr();
                chi[i] = Complex64::new(0.0, 0.0);
            }
            p = norm(&chi).powi(2);
        }
        let state = if p > 0.0 {
            let s = p.sqrt();
            WalkState::from_parts(basis.clone(), chi.iter().map(|a| a / s).collect(), true)
        } else {
            WalkState::zeros(basis.clone())
        };
        records.push(MonitorRecord {
            n,
            p_survive: p,
            q_arrive: q,
            state,
        });
    }
    Ok(records)
}

/// `|<exit|U^n|psi0>|^2` for `n = 0..=n_max`, with entry 0 set to zero.
///
/// Equal to the monitored first-arrival probability only when `exit` points
/// outward along a tail: free propagation never brings amplitude back.
pub fn first_arrival_direct(
    op: &StepOperator,
    psi0: &WalkState,
    exit: OrientedEdge,
    n_max: usize,
) -> Result<Vec<f64>, WalkError> {
    let basis = op.basis();
    let idx = basis
        .index_of(&exit)
        .ok_or_else(|| WalkError::UnknownEdge(basis.edge_label(exit)))?;
    if !basis.is_outgoing_tail_edge(exit) {
        return Err(WalkError::NotOnTail(basis.edge_label(exit)));
    }
    check(op, psi0, n_max)?;
    let mut v = psi0.amplitudes().to_vec();
    let mut q = vec![0.0; n_max + 1];
    for slot in q.iter_mut().skip(1) {
        v = op.apply_slice(&v);
        *slot = v[idx].norm_sqr();
    }
    Ok(q)
}

/// Probability carried by one undirected edge.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeProbability {
    /// Orientation that comes first in the basis.
    pub edge: OrientedEdge,
    pub probability: f64,
}

/// `|amp(A,B)|^2 + |amp(B,A)|^2` for every undirected edge, in basis order.
pub fn distribution(psi: &WalkState) -> Vec<EdgeProbability> {
    let basis: &Arc<EdgeBasis> = psi.basis();
    let amps = psi.amplitudes();
    let mut seen: BTreeMap<OrientedEdge, usize> = BTreeMap::new();
    let mut out: Vec<EdgeProbability> = Vec::with_capacity(amps.len() / 2);
    for (i, a) in amps.iter().enumerate() {
        let e = basis.edge(i);
        match seen.get(&e.reversed()) {
            Some(&k) => out[k].probability += a.norm_sqr(),
            None => {
                seen.insert(e, out.len());
                out.push(EdgeProbability {
                    edge: e,
                    probability: a.norm_sqr(),
                });
            }
        }
    }
    out
}
