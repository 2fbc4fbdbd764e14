//! Reference graphs and closed-form results used to check the numerical
//! pipeline.
//!
//! The diamond graph has Grover(3) vertices `0` and `2` joined by two arms
//! through the degree-2 vertices `1A` and `1B`. A phase `phi` is picked up on
//! every passage through `1B`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::graph::{truncate, EdgeSpec, GraphError, TailedGraph, VertexKind, VertexSpec};

mod selftest;

pub use selftest::{self_test, SelfTestCheck};

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("line needs at least one vertex")]
    EmptyLine,
    #[error("closed form has a pole at z = {z}")]
    Pole { z: Complex64 },
}

/// Phase parameter of the diamond graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiamondParams {
    pub phi: f64,
}

pub fn build_diamond(phi: f64) -> TailedGraph {
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
    .expect("diamond graph is well formed")
}

/// Label of the `i`-th vertex of a line built by [`build_line`].
pub fn line_label(i: usize, length: usize) -> String {
    let width = (length.max(2) - 1).to_string().len();
    format!("n{i:0width$}")
}

/// A chain of `length` two-port `(t, r)` vertices, entry at the first and
/// exit at the last. Ports are ordered so that "forward" means towards the
/// exit.
pub fn build_line(t: Complex64, r: Complex64, length: usize) -> Result<TailedGraph, OracleError> {
    if length == 0 {
        return Err(OracleError::EmptyLine);
    }
    let vertices = (0..length)
        .map(|i| VertexSpec::new(line_label(i, length), VertexKind::TwoPort { t, r }))
        .collect();
    let edges = (1..length)
        .map(|i| EdgeSpec::new(line_label(i - 1, length), line_label(i, length)))
        .collect();
    Ok(TailedGraph::new(
        vertices,
        edges,
        line_label(0, length),
        line_label(length - 1, length),
    )?)
}

/// `c2 u^2 + c1 u + c0` with `u = z^4`.
#[derive(Clone, Copy)]
struct Quadratic([Complex64; 3]);

impl Quadratic {
    fn eval(&self, u: Complex64) -> Complex64 {
        let [c0, c1, c2] = self.0;
        (c2 * u + c1) * u + c0
    }
}

/// Roots of the common denominator `u^2 - (1 + 8a + a^2) u + 9a^2`.
fn denominator_roots(a: Complex64) -> (Complex64, Complex64) {
    let b = Complex64::new(1.0, 0.0) + 8.0 * a + a * a;
    let c = 9.0 * a * a;
    let mut s = (b * b - 4.0 * c).sqrt();
    if (b.conj() * s).re < 0.0 {
        s = -s;
    }
    let u1 = (b + s) / 2.0;
    (u1, c / u1)
}

/// Evaluates `num(u) / (-(u - u1)(u - u2))`, cancelling a root shared by
/// numerator and denominator (the removable singularity at the bound-state
/// eigenvalues when `phi = 0`).
fn eval_rational(num: Quadratic, a: Complex64, z: Complex64) -> Result<Complex64, OracleError> {
    let u = z.powi(4);
    let (u1, u2) = denominator_roots(a);
    let scale = num.0.iter().map(|c| c.norm()).fold(1.0, f64::max);
    for (root, other) in [(u1, u2), (u2, u1)] {
        if num.eval(root).norm() <= 1e-10 * scale {
            // num(u) = (u - root) * (c2 u + (c1 + c2 root))
            let [_, c1, c2] = num.0;
            let reduced = c2 * u + (c1 + c2 * root);
            let den = -(u - other);
            if den.norm() < 1e-14 {
                return Err(OracleError::Pole { z });
            }
            return Ok(reduced / den);
        }
    }
    let den = -(u - u1) * (u - u2);
    if den.norm() < 1e-14 {
        return Err(OracleError::Pole { z });
    }
    Ok(num.eval(u) / den)
}

/// Closed-form transmission amplitude of the diamond graph,
/// `4 z^3 (1 + e^{-i phi}) (z^4 - e^{-i phi}) / (z^4 (1 + e^{-i phi})^2 - (3 e^{-i phi} - z^4)^2)`.
pub fn closed_form_t(z: Complex64, phi: f64) -> Result<Complex64, OracleError> {
    let a = Complex64::from_polar(1.0, -phi);
    let k = 4.0 * (Complex64::new(1.0, 0.0) + a);
    let num = Quadratic([-k * a, k, Complex64::default()]);
    Ok(z.powi(3) * eval_rational(num, a, z)?)
}

/// Closed-form reflection amplitude `b_{-1}` of the diamond graph at
/// `z = e^{i theta}`.
pub fn closed_form_b_minus1(theta: f64, phi: f64) -> Result<Complex64, OracleError> {
    let a = Complex64::from_polar(1.0, -phi);
    let z = Complex64::from_polar(1.0, theta);
    let one = Complex64::new(1.0, 0.0);
    // z^5 (1+a)^2 + z (3a - u)(a - 3u) = z [3u^2 + (1 - 8a + a^2) u + 3a^2]
    let num = Quadratic([3.0 * a * a, one - 8.0 * a + a * a, Complex64::new(3.0, 0.0)]);
    Ok(z * eval_rational(num, a, z)?)
}

/// Arm-difference basis `u1..u4` of the diamond's bound-state space, as
/// vectors over the interior oriented edges in basis order.
pub fn bound_state_basis_diamond() -> Vec<DVector<Complex64>> {
    let basis = Arc::new(truncate(&build_diamond(0.0), 1));
    let n = basis.interior_len();
    let pair = |plus: &str, minus: &str| {
        let mut v = DVector::zeros(n);
        v[basis.index_of(&basis.parse_edge(plus).unwrap()).unwrap()] = Complex64::new(FRAC_1_SQRT_2, 0.0);
        v[basis.index_of(&basis.parse_edge(minus).unwrap()).unwrap()] = Complex64::new(-FRAC_1_SQRT_2, 0.0);
        v
    };
    vec![
        pair("0,1A", "0,1B"),
        pair("1A,2", "1B,2"),
        pair("1B,0", "1A,0"),
        pair("2,1B", "2,1A"),
    ]
}

/// Random connected graph of Grover vertices with random phase shifters.
///
/// Between 2 and `max_vertices` vertices; a random spanning tree plus a few
/// extra edges; every edge endpoint carries a shifter with probability 1/3
/// and every vertex a global phase with probability 1/4.
pub fn random_grover_graph<R: Rng + ?Sized>(rng: &mut R, max_vertices: usize) -> TailedGraph {
    let n = rng.gen_range(2..=max_vertices.max(2));
    let label = |i: usize| format!("v{i:02}");
    let mut pairs: Vec<(usize, usize)> = (1..n).map(|i| (rng.gen_range(0..i), i)).collect();
    let extra = rng.gen_range(0..=n);
    for _ in 0..extra {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        let key = (a.min(b), a.max(b));
        if a != b && !pairs.contains(&key) {
            pairs.push(key);
        }
    }
    pairs.shuffle(rng);
    let mut degree = vec![0usize; n];
    let edges: Vec<EdgeSpec> = pairs
        .iter()
        .map(|&(a, b)| {
            degree[a] += 1;
            degree[b] += 1;
            let mut e = EdgeSpec::new(label(a), label(b));
            for end in [a, b] {
                if rng.gen_bool(1.0 / 3.0) {
                    e = e.with_phase(label(end), rng.gen_range(0.0..std::f64::consts::TAU));
                }
            }
            e
        })
        .collect();
    let entry = rng.gen_range(0..n);
    let mut exit = rng.gen_range(0..n - 1);
    if exit >= entry {
        exit += 1;
    }
    degree[entry] += 1;
    degree[exit] += 1;
    let vertices = (0..n)
        .map(|i| {
            let grover = VertexKind::Grover { degree: degree[i] };
            let kind = if rng.gen_bool(0.25) {
                VertexKind::Phase {
                    phi: rng.gen_range(0.0..std::f64::consts::TAU),
                    inner: Box::new(grover),
                }
            } else {
                grover
            };
            VertexSpec::new(label(i), kind)
        })
        .collect();
    TailedGraph::new(vertices, edges, label(entry), label(exit)).expect("generated graph is well formed")
}
