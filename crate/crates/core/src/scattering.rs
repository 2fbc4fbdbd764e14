//! Scattering data of a tailed graph.
//!
//! A wave `|-1,0>` injected along one tail either reflects back along the same
//! tail or is transmitted to the other one. Restricting `U` to the `2N`
//! interior oriented edges gives the contraction `G`; the interior part of the
//! generalized eigenvector solves
//!
//! ```text
//! (I - z G1) psi_G(z) = z P1 w,        w = P_G U |-1,0>
//! ```
//!
//! on the orthogonal complement of the bound states (`G1 = P1 G P1`), and
//!
//! ```text
//! t(z) = z (<j,j+1|U|-1,0> + <j,j+1|U|psi_G(z)>)
//! r(z) = z (<0,-1|U|-1,0>  + <0,-1|U|psi_G(z)>)
//! ```
//!
//! The Taylor coefficients of `t` are the first-arrival amplitudes of the
//! monitored walk: `q(n) = |c_n|^2`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::graph::{truncate, Direction, EdgeBasis, OrientedEdge, TailedGraph};
use crate::linalg::{self, LinalgError};
use crate::operator::{OperatorError, StepOperator, WalkState};

type C = Complex64;

/// Distance from the unit circle within which an eigenvalue of `G` counts as
/// a bound state.
pub const BOUND_TOL: f64 = 1e-8;
/// Largest acceptable 1-norm condition number of `I - z G1`.
pub const MAX_CONDITION: f64 = 1e12;
/// Stabilization threshold for Taylor coefficients between sample doublings.
pub const COEFF_TOL: f64 = 1e-12;
/// Number of sample doublings before coefficient extraction gives up.
pub const MAX_DOUBLINGS: usize = 4;

const ZERO: C = C::new(0.0, 0.0);

#[derive(Debug, Error, PartialEq)]
pub enum ScatteringError {
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("eigensolver failed: {0}")]
    Eigen(#[from] LinalgError),
    #[error("unit-circle eigenvalue {eigenvalue} has eigenvector residual {residual:e}")]
    BoundResidual { eigenvalue: C, residual: f64 },
    #[error("I - zG1 is ill-conditioned at z = {z} (condition {condition:e})")]
    IllConditioned { z: C, condition: f64 },
    #[error("I - zG1 is singular at z = {z}")]
    Singular { z: C },
    #[error("Taylor coefficients did not settle after {samples} samples (residual {residual:e})")]
    NonConvergence { samples: usize, residual: f64 },
    #[error("coefficient order must be at least 1")]
    InvalidOrder,
    #[error("exit is never reached (P_out = {p_out:e}); hitting time is undefined")]
    NoArrival { p_out: f64 },
}

/// Unit-modulus eigenpair of `G`: an eigenvector of `U` living entirely on
/// the interior edges.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundState {
    pub eigenvalue: C,
    pub vector: DVector<C>,
}

/// Interior problem for waves injected from one side.
#[derive(Debug, Clone)]
pub struct ScatteringProblem {
    graph: TailedGraph,
    direction: Direction,
    basis: Arc<EdgeBasis>,
    g: DMatrix<C>,
    w: DVector<C>,
    y_reflect: DVector<C>,
    y_transmit: DVector<C>,
    direct_reflect: C,
    direct_transmit: C,
    bound: Vec<BoundState>,
    p1: DMatrix<C>,
    g1: DMatrix<C>,
    rhs: DVector<C>,
}

/// Scattering amplitudes at one point `z`.
#[derive(Debug, Clone)]
pub struct Amplitudes {
    pub t: C,
    pub r: C,
    pub psi_g: DVector<C>,
    /// 1-norm condition number of `I - z G1`.
    pub condition: f64,
}

pub fn build_problem(graph: &TailedGraph, direction: Direction) -> Result<ScatteringProblem, ScatteringError> {
    let basis = Arc::new(truncate(graph, 1));
    let op = crate::operator::assemble(graph, basis.clone())?;
    let n = basis.interior_len();
    let idx = |e: OrientedEdge| basis.index_of(&e).expect("tail edge in window");
    let inj = idx(basis.injection_edge(direction));
    let refl = idx(basis.reflection_edge(direction));
    let trans = idx(basis.transmission_edge(direction));

    let g = DMatrix::from_fn(n, n, |i, j| op.entry(i, j));
    let w = DVector::from_fn(n, |i, _| op.entry(i, inj));
    let y_reflect = DVector::from_fn(n, |j, _| op.entry(refl, j));
    let y_transmit = DVector::from_fn(n, |j, _| op.entry(trans, j));

    let bound = unit_eigenpairs(&g)?;
    let mut p1 = DMatrix::<C>::identity(n, n);
    for b in &bound {
        p1 -= &b.vector * b.vector.adjoint();
    }
    let g1 = &p1 * &g * &p1;
    let rhs = &p1 * &w;
    Ok(ScatteringProblem {
        graph: graph.clone(),
        direction,
        basis,
        direct_reflect: op.entry(refl, inj),
        direct_transmit: op.entry(trans, inj),
        g,
        w,
        y_reflect,
        y_transmit,
        bound,
        p1,
        g1,
        rhs,
    })
}

/// All unit-modulus eigenpairs of `g`, orthonormal within each eigenvalue and
/// ordered by argument.
pub fn unit_eigenpairs(g: &DMatrix<C>) -> Result<Vec<BoundState>, ScatteringError> {
    let n = g.nrows();
    let eigenvalues: Vec<C> = linalg::eigenpairs(g)?.into_iter().map(|(l, _)| l).collect();
    let mut out = Vec::new();
    for (lambda, mult) in linalg::unit_circle_clusters(&eigenvalues, BOUND_TOL, 1e-6) {
        let shifted = g - DMatrix::<C>::identity(n, n) * lambda;
        let (vectors, _) = linalg::smallest_singular_subspace(&shifted, mult);
        for v in vectors.column_iter() {
            let v = v.into_owned();
            let eigenvalue = if mult == 1 { v.dotc(&(g * &v)) } else { lambda };
            let residual = (g * &v - &v * eigenvalue).norm();
            if residual >= BOUND_TOL || (eigenvalue.norm() - 1.0).abs() >= BOUND_TOL {
                return Err(ScatteringError::BoundResidual { eigenvalue, residual });
            }
            out.push(BoundState { eigenvalue, vector: v });
        }
    }
    Ok(out)
}

/// Bound states found while building the problem.
pub fn find_bound_states(problem: &ScatteringProblem) -> Vec<BoundState> {
    problem.bound.clone()
}

impl ScatteringProblem {
    pub fn graph(&self) -> &TailedGraph {
        &self.graph
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// Window with one edge per tail; its first `2N` edges index `G`.
    pub fn basis(&self) -> &Arc<EdgeBasis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn g(&self) -> &DMatrix<C> {
        &self.g
    }

    pub fn w(&self) -> &DVector<C> {
        &self.w
    }

    pub fn g1(&self) -> &DMatrix<C> {
        &self.g1
    }

    /// Projector onto the complement of the bound states.
    pub fn p1(&self) -> &DMatrix<C> {
        &self.p1
    }

    pub fn bound_states(&self) -> &[BoundState] {
        &self.bound
    }

    /// `(<0,-1|U|-1,0>, <j,j+1|U|-1,0>)` for the problem's direction.
    pub fn direct_terms(&self) -> (C, C) {
        (self.direct_reflect, self.direct_transmit)
    }

    /// Row `<out|U|.>` restricted to interior edges, for the reflected and
    /// transmitted outputs.
    pub fn output_rows(&self) -> (&DVector<C>, &DVector<C>) {
        (&self.y_reflect, &self.y_transmit)
    }

    fn solve(&self, z: C, with_condition: bool) -> Result<(DVector<C>, f64), ScatteringError> {
        let n = self.dim();
        let a = DMatrix::<C>::identity(n, n) - &self.g1 * z;
        let b = &self.rhs * z;
        let (x, condition) = if with_condition {
            linalg::solve_with_condition(&a, &b).map_err(|_| ScatteringError::Singular { z })?
        } else {
            (
                linalg::solve(&a, &b).map_err(|_| ScatteringError::Singular { z })?,
                f64::NAN,
            )
        };
        if condition > MAX_CONDITION {
            return Err(ScatteringError::IllConditioned { z, condition });
        }
        if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(ScatteringError::Singular { z });
        }
        Ok((x, condition))
    }

    /// `(t(z)/z, r(z)/z)` from an interior solution.
    fn reduced(&self, psi: &DVector<C>) -> (C, C) {
        (
            self.direct_transmit + self.y_transmit.transpose().dot(&psi.transpose()),
            self.direct_reflect + self.y_reflect.transpose().dot(&psi.transpose()),
        )
    }
}

pub fn amplitudes_at(problem: &ScatteringProblem, z: C) -> Result<Amplitudes, ScatteringError> {
    let (psi_g, condition) = problem.solve(z, true)?;
    let (ft, fr) = problem.reduced(&psi_g);
    Ok(Amplitudes {
        t: z * ft,
        r: z * fr,
        psi_g,
        condition,
    })
}

/// `dt/dz`.
pub fn transmission_derivative(problem: &ScatteringProblem, z: C) -> Result<C, ScatteringError> {
    let (psi, _) = problem.solve(z, true)?;
    let n = problem.dim();
    let a = DMatrix::<C>::identity(n, n) - &problem.g1 * z;
    let dpsi = linalg::solve(&a, &(&problem.rhs + &problem.g1 * &psi)).map_err(|_| ScatteringError::Singular { z })?;
    let (ft, _) = problem.reduced(&psi);
    Ok(ft + z * problem.y_transmit.transpose().dot(&dpsi.transpose()))
}

/// `t_R(z) = t(z*)*`, equal to `t(z)*` on the unit circle at `1/z`.
pub fn reflected_transmission(problem: &ScatteringProblem, z: C) -> Result<C, ScatteringError> {
    Ok(amplitudes_at(problem, z.conj())?.t.conj())
}

/// `t` and `r` sampled on the unit circle with their Taylor coefficients.
#[derive(Debug, Clone)]
pub struct AmplitudeSeries {
    pub n_max: usize,
    /// Radius of the sampling circle; `1.0` unless the fallback was needed.
    pub radius: f64,
    /// `t(radius e^{2 pi i k / N})` for `k = 0..N`.
    pub t_samples: Vec<C>,
    /// `r(radius e^{2 pi i k / N})` for `k = 0..N`.
    pub r_samples: Vec<C>,
    /// `c_0..=c_{n_max}`; `c_0` is exactly zero.
    pub coefficients: Vec<C>,
    /// Largest change of any coefficient in the final doubling.
    pub residual: f64,
    /// Fitted `rho` in `|c_n| ~ A rho^n`.
    pub decay_rate: f64,
    decay_amplitude: f64,
}

impl AmplitudeSeries {
    pub fn samples(&self) -> usize {
        self.t_samples.len()
    }

    pub fn q(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c.norm_sqr()).collect()
    }
}

fn root_of_unity(k: usize, n: usize) -> C {
    C::from_polar(1.0, std::f64::consts::TAU * k as f64 / n as f64)
}

fn sample_reduced(
    problem: &ScatteringProblem,
    radius: f64,
    n: usize,
    ks: impl IndexedParallelIterator<Item = usize>,
) -> Result<Vec<(C, C)>, ScatteringError> {
    ks.map(|k| {
        let z = radius * root_of_unity(k, n);
        let (psi, _) = problem.solve(z, false)?;
        Ok(problem.reduced(&psi))
    })
    .collect()
}

/// `c_1..=c_count` from samples of `f(z) = t(z)/z` on the circle of the given
/// radius: `c_{k+1} = DFT(f)_k / (N radius^k)`.
fn dft_coefficients(f: &[(C, C)], radius: f64, count: usize) -> Vec<C> {
    let n = f.len();
    let mut buf: Vec<C> = f.iter().map(|p| p.0).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf.truncate(count);
    buf.iter()
        .enumerate()
        .map(|(k, v)| v / (n as f64 * radius.powi(k as i32)))
        .collect()
}

/// `(t, r)` samples, coefficients, final residual.
type Extraction = (Vec<(C, C)>, Vec<C>, f64);

/// Samples at radius `radius`, doubling from `max(4 n_max, 256)` points until
/// successive coefficient estimates agree to [`COEFF_TOL`].
fn extract(problem: &ScatteringProblem, n_max: usize, radius: f64) -> Result<Extraction, ScatteringError> {
    let mut n = (4 * n_max).max(256);
    let mut f = sample_reduced(problem, radius, n, (0..n).into_par_iter())?;
    let mut d = dft_coefficients(&f, radius, n_max);
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_DOUBLINGS {
        let odd = sample_reduced(problem, radius, 2 * n, (0..n).into_par_iter().map(|k| 2 * k + 1))?;
        f = f.into_iter().zip(odd).flat_map(|(e, o)| [e, o]).collect();
        n *= 2;
        let next = dft_coefficients(&f, radius, n_max);
        residual = d.iter().zip(&next).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        d = next;
        if residual <= COEFF_TOL {
            return Ok((f, d, residual));
        }
    }
    Err(ScatteringError::NonConvergence { samples: n, residual })
}

/// Radius of the fallback contour: rounding in `c_n` grows like
/// `radius^{-n}`, capped here at `1e3` for `n = n_max`.
pub fn fallback_radius(n_max: usize) -> f64 {
    10f64.powf(-3.0 / n_max as f64)
}

/// Taylor coefficients `c_n` of `t(z)` for `n <= n_max`, by inverse DFT of
/// samples on the unit circle. The sample count starts at
/// `max(4 n_max, 256)` and doubles until successive estimates agree to
/// [`COEFF_TOL`].
///
/// When `G1` has eigenvalues close to the unit circle the coefficients decay
/// too slowly for unit-circle samples to settle; extraction then repeats on
/// the circle of radius [`fallback_radius`], inside the disc of analyticity.
pub fn taylor_coefficients(problem: &ScatteringProblem, n_max: usize) -> Result<AmplitudeSeries, ScatteringError> {
    if n_max == 0 {
        return Err(ScatteringError::InvalidOrder);
    }
    let (radius, (f, d, residual)) = match extract(problem, n_max, 1.0) {
        Ok(found) => (1.0, found),
        Err(ScatteringError::NonConvergence { .. }) => {
            let r = fallback_radius(n_max);
            (r, extract(problem, n_max, r)?)
        }
        Err(e) => return Err(e),
    };
    let n = f.len();
    // f(z) = t(z)/z, so c_0 = 0 exactly.
    let mut coefficients = Vec::with_capacity(n_max + 1);
    coefficients.push(ZERO);
    coefficients.extend(d);
    let (decay_amplitude, decay_rate) = fit_decay(&coefficients);
    let (t_samples, r_samples) = f
        .iter()
        .enumerate()
        .map(|(k, &(ft, fr))| {
            let z = radius * root_of_unity(k, n);
            (z * ft, z * fr)
        })
        .unzip();
    Ok(AmplitudeSeries {
        n_max,
        radius,
        t_samples,
        r_samples,
        coefficients,
        residual,
        decay_rate,
        decay_amplitude,
    })
}

/// Least-squares fit of `log env(n) = log A + n log rho` over the upper half
/// of the coefficients, where `env` is the running maximum from the right.
fn fit_decay(c: &[C]) -> (f64, f64) {
    let n_max = c.len() - 1;
    let mut env = vec![0.0f64; c.len()];
    let mut m: f64 = 0.0;
    for n in (0..c.len()).rev() {
        m = m.max(c[n].norm());
        env[n] = m;
    }
    let lo = (n_max / 2).max(1);
    let pts: Vec<(f64, f64)> = (lo..=n_max)
        .filter(|&n| env[n] > 1e-150)
        .map(|n| (n as f64, env[n].ln()))
        .collect();
    if pts.len() < 2 {
        return (0.0, 0.0);
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = (sxy / sxx).min(0.0);
    let intercept = my - slope * mx;
    (intercept.exp(), slope.exp())
}

/// First-arrival summary of a converged series.
#[derive(Debug, Clone, PartialEq)]
pub struct HittingStatistics {
    /// `sum_{n <= n_max} |c_n|^2`.
    pub p_out: f64,
    /// `sum n |c_n|^2 / p_out`.
    pub h: f64,
    /// Estimate of `sum_{n > n_max} |c_n|^2` from the fitted decay.
    pub tail_bound: f64,
    /// Mean of `|t|^2` over the samples, when they lie on the unit circle.
    pub circle_p_out: Option<f64>,
}

pub fn hitting_statistics(series: &AmplitudeSeries) -> Result<HittingStatistics, ScatteringError> {
    let q = series.q();
    let p_out: f64 = q.iter().sum();
    if p_out < 1e-12 {
        return Err(ScatteringError::NoArrival { p_out });
    }
    let h = q.iter().enumerate().map(|(n, qn)| n as f64 * qn).sum::<f64>() / p_out;
    let rho = series.decay_rate;
    let room = (1.0 - p_out).max(0.0);
    let tail_bound = if rho < 1.0 {
        let first = series.decay_amplitude * rho.powi(series.n_max as i32 + 1);
        (first * first / (1.0 - rho * rho)).min(room)
    } else {
        room
    };
    let circle_p_out = (series.radius == 1.0)
        .then(|| series.t_samples.iter().map(|t| t.norm_sqr()).sum::<f64>() / series.samples() as f64);
    Ok(HittingStatistics {
        p_out,
        h,
        tail_bound,
        circle_p_out,
    })
}

/// `P_out` and `h` as circle integrals of `t_R(1/z) t(z)` and
/// `t_R(1/z) z t'(z)`, by the trapezoid rule on `samples` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourStatistics {
    pub p_out: f64,
    pub h: f64,
}

pub fn contour_statistics(problem: &ScatteringProblem, samples: usize) -> Result<ContourStatistics, ScatteringError> {
    let terms: Vec<(f64, f64)> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let z = root_of_unity(k, samples);
            let t = amplitudes_at(problem, z)?.t;
            let tr = reflected_transmission(problem, z.inv())?;
            let dt = transmission_derivative(problem, z)?;
            Ok(((tr * t).re, (tr * z * dt).re))
        })
        .collect::<Result<_, ScatteringError>>()?;
    let p_out = terms.iter().map(|t| t.0).sum::<f64>() / samples as f64;
    let moment = terms.iter().map(|t| t.1).sum::<f64>() / samples as f64;
    if p_out < 1e-12 {
        return Err(ScatteringError::NoArrival { p_out });
    }
    Ok(ContourStatistics {
        p_out,
        h: moment / p_out,
    })
}

/// `S = [[r_l, t_r], [t_l, r_r]]` from both injection directions.
#[derive(Debug, Clone)]
pub struct SMatrixSolver {
    left: ScatteringProblem,
    right: ScatteringProblem,
}

impl SMatrixSolver {
    pub fn new(graph: &TailedGraph) -> Result<Self, ScatteringError> {
        Ok(SMatrixSolver {
            left: build_problem(graph, Direction::Left)?,
            right: build_problem(graph, Direction::Right)?,
        })
    }

    pub fn left(&self) -> &ScatteringProblem {
        &self.left
    }

    pub fn right(&self) -> &ScatteringProblem {
        &self.right
    }

    pub fn at(&self, theta: f64) -> Result<Matrix2<C>, ScatteringError> {
        let z = C::from_polar(1.0, theta);
        let l = amplitudes_at(&self.left, z)?;
        let r = amplitudes_at(&self.right, z)?;
        Ok(Matrix2::new(l.r, r.t, l.t, r.r))
    }
}

pub fn s_matrix(graph: &TailedGraph, theta: f64) -> Result<Matrix2<C>, ScatteringError> {
    SMatrixSolver::new(graph)?.at(theta)
}

/// `max |S^dagger S - I|`.
pub fn unitarity_defect(s: &Matrix2<C>) -> f64 {
    (s.adjoint() * s - Matrix2::identity())
        .iter()
        .map(|v| v.norm())
        .fold(0.0, f64::max)
}

/// Generalized eigenvector `Psi(z)` on a finite window together with the
/// operator it lives under.
#[derive(Debug, Clone)]
pub struct GeneralizedEigenvector {
    pub op: StepOperator,
    pub state: WalkState,
    excluded: [usize; 2],
}

impl GeneralizedEigenvector {
    /// `|z U Psi - Psi|` over all edges except the two incoming edges at the
    /// reflecting ends of the window.
    pub fn residual(&self, z: C) -> f64 {
        let psi = self.state.amplitudes();
        let u_psi = self.op.apply_slice(psi);
        u_psi
            .iter()
            .zip(psi)
            .enumerate()
            .filter(|(i, _)| !self.excluded.contains(i))
            .map(|(_, (a, b))| (z * a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Builds `Psi(z)` on a window of `tail_length` edges per tail: unit incoming
/// wave `z^{-(d-1)}` and reflected wave `r z^{d-1}` on the injection tail,
/// transmitted wave `t z^{d-1}` on the far tail, `psi_G(z)` inside.
pub fn generalized_eigenvector(
    problem: &ScatteringProblem,
    z: C,
    tail_length: usize,
) -> Result<GeneralizedEigenvector, ScatteringError> {
    let amps = amplitudes_at(problem, z)?;
    let basis = Arc::new(truncate(&problem.graph, tail_length));
    let op = crate::operator::assemble(&problem.graph, basis.clone())?;
    let left = problem.direction == Direction::Left;
    let near = |d| if left { basis.in_tail(d) } else { basis.out_tail(d) };
    let far = |d| if left { basis.out_tail(d) } else { basis.in_tail(d) };
    let mut psi = vec![ZERO; basis.len()];
    psi[..problem.dim()].copy_from_slice(amps.psi_g.as_slice());
    let at = |e: OrientedEdge| basis.index_of(&e).expect("tail edge in window");
    for d in 1..=tail_length {
        let k = d as i32 - 1;
        psi[at(OrientedEdge::new(near(d), near(d - 1)))] = z.powi(-k);
        psi[at(OrientedEdge::new(near(d - 1), near(d)))] = amps.r * z.powi(k);
        psi[at(OrientedEdge::new(far(d - 1), far(d)))] = amps.t * z.powi(k);
    }
    let excluded = [
        at(OrientedEdge::new(near(tail_length), near(tail_length - 1))),
        at(OrientedEdge::new(far(tail_length), far(tail_length - 1))),
    ];
    let state = WalkState::from_parts(basis.clone(), psi, false);
    Ok(GeneralizedEigenvector { op, state, excluded })
}

/// Embeds an interior vector into a window of the given size.
pub fn embed(problem: &ScatteringProblem, v: &DVector<C>, tail_length: usize) -> Vec<C> {
    let len = truncate(&problem.graph, tail_length).len();
    let mut out = vec![ZERO; len];
    out[..v.len()].copy_from_slice(v.as_slice());
    out
}
