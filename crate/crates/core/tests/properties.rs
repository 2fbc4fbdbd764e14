mod common;

use std::sync::Arc;

use edgewalk::linalg::eigenpairs;
use edgewalk::operator::{flux_into, flux_out_of};
use edgewalk::oracles::{build_diamond, random_grover_graph};
use edgewalk::scattering::{embed, generalized_eigenvector};
use edgewalk::walk::window_for;
use edgewalk::{
    build_problem, check_unitarity, evolve, first_arrival_direct, grover_coefficients, parse_graph, serialize_graph,
    taylor_coefficients, time_reverse, truncate, Complex64, Direction, StepOperator, WalkState,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn graph_from(seed: u64, max_vertices: usize) -> edgewalk::TailedGraph {
    random_grover_graph(&mut ChaCha8Rng::seed_from_u64(seed), max_vertices)
}

fn random_state(op: &StepOperator, seed: u64) -> WalkState {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps = (0..op.dim())
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let mut psi = WalkState::from_amplitudes(op.basis().clone(), amps).unwrap();
    psi.normalize();
    psi
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn serialize_then_parse_is_identity(seed in any::<u64>()) {
        let g = graph_from(seed, 12);
        let text = serialize_graph(&g);
        prop_assert_eq!(parse_graph(&text).unwrap(), g);
    }

    #[test]
    fn grover_satisfies_both_conditions(n in 1usize..512) {
        let (r, t) = grover_coefficients(n).unwrap();
        let m = n as f64;
        let norm = (m - 1.0) * t.norm_sqr() + r.norm_sqr();
        let cross = (m - 2.0) * t.norm_sqr() + (r.conj() * t + t.conj() * r).re;
        prop_assert!((norm - 1.0).abs() < 1e-14);
        prop_assert!(cross.abs() < 1e-14);
    }

    #[test]
    fn step_operator_is_unitary(seed in any::<u64>(), tail in 1usize..6) {
        let op = StepOperator::for_graph(&graph_from(seed, 10), tail).unwrap();
        prop_assert!(check_unitarity(&op) < 1e-13);
    }

    #[test]
    fn basis_order_is_deterministic(seed in any::<u64>(), tail in 1usize..5) {
        let g = graph_from(seed, 12);
        let a = truncate(&g, tail);
        let b = truncate(&g.clone(), tail);
        prop_assert_eq!(a.edges(), b.edges());
        prop_assert_eq!(a.interior_len(), 2 * g.edges().len());
    }

    #[test]
    fn flux_through_every_vertex_is_conserved(seed in any::<u64>(), mask in any::<u32>()) {
        let op = StepOperator::for_graph(&graph_from(seed, 10), 3).unwrap();
        let psi = random_state(&op, seed ^ 0x9e37);
        let next = op.apply(&psi).unwrap();
        let in_set = |n: edgewalk::Node| match n {
            edgewalk::Node::Interior(i) => mask >> (i % 32) & 1 == 1,
            edgewalk::Node::InTail(d) | edgewalk::Node::OutTail(d) => d % 2 == (mask & 1) as usize,
        };
        let before = flux_into(&psi, in_set) + flux_into(&psi, |n| !in_set(n));
        let after = flux_out_of(&next, in_set) + flux_out_of(&next, |n| !in_set(n));
        prop_assert!((flux_into(&psi, in_set) - flux_out_of(&next, in_set)).abs() < 1e-12);
        prop_assert!((before - after).abs() < 1e-12);
    }

    #[test]
    fn time_reversal_is_an_involution(seed in any::<u64>()) {
        let op = StepOperator::for_graph(&graph_from(seed, 8), 2).unwrap();
        let psi = random_state(&op, seed);
        let back = time_reverse(&time_reverse(&psi));
        prop_assert_eq!(back.amplitudes(), psi.amplitudes());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn long_evolution_preserves_norm(seed in any::<u64>()) {
        let op = StepOperator::for_graph(&graph_from(seed, 10), 4).unwrap();
        let mut v = random_state(&op, seed).amplitudes().to_vec();
        for _ in 0..10_000 {
            v = op.apply_slice(&v);
        }
        let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        prop_assert!((norm - 1.0).abs() < 1e-10);
    }

    #[test]
    fn coefficients_match_direct_walk(seed in any::<u64>()) {
        let g = graph_from(seed, 8);
        let p = build_problem(&g, Direction::Left).unwrap();
        let s = taylor_coefficients(&p, 40).unwrap();
        let op = window_for(&g, 40).unwrap();
        let b = op.basis().clone();
        let psi = WalkState::basis_state(b.clone(), b.injection_edge(Direction::Left)).unwrap();
        let direct = first_arrival_direct(&op, &psi, b.transmission_edge(Direction::Left), 40).unwrap();
        for (a, d) in s.q().iter().zip(&direct) {
            prop_assert!((a - d).abs() < 1e-10);
        }
        prop_assert!(s.q().iter().sum::<f64>() <= 1.0 + 1e-10);
    }

    #[test]
    fn generalized_eigenvector_solves_eigen_equation(seed in any::<u64>(), theta in 0.0f64..std::f64::consts::TAU) {
        let p = build_problem(&graph_from(seed, 8), Direction::Left).unwrap();
        let z = Complex64::from_polar(1.0, theta);
        match generalized_eigenvector(&p, z, 5) {
            Ok(ev) => prop_assert!(ev.residual(z) < 1e-10 * (1.0 + ev.state.norm())),
            Err(edgewalk::ScatteringError::IllConditioned { .. }) => {}
            Err(e) => prop_assert!(false, "{}", e),
        }
    }
}

#[test]
fn truncation_window_is_exact() {
    let g = build_diamond(0.6);
    let n = 20;
    let run = |tail| {
        let op = StepOperator::for_graph(&g, tail).unwrap();
        let b = op.basis().clone();
        let psi = WalkState::basis_state(b.clone(), b.injection_edge(Direction::Left)).unwrap();
        (b, evolve(&op, &psi, n).unwrap())
    };
    let (small_basis, small) = run(n + 2);
    let (_, large) = run(n + 10);
    for (i, e) in small_basis.edges().iter().enumerate() {
        assert!((small.amplitudes()[i] - large.amplitude(e)).norm() < 1e-15);
    }
}

#[test]
fn corpus_lemma_one_dichotomy() {
    for g in common::corpus().iter().take(30) {
        let p = build_problem(g, Direction::Left).unwrap();
        let op = StepOperator::for_graph(g, 2).unwrap();
        for (lambda, v) in eigenpairs(p.g()).unwrap() {
            let full = embed(&p, &v, 2);
            let uv = op.apply_slice(&full);
            let res = uv
                .iter()
                .zip(&full)
                .map(|(a, x)| (a - lambda * x).norm_sqr())
                .sum::<f64>()
                .sqrt();
            if (lambda.norm() - 1.0).abs() < 1e-8 {
                assert!(res < 1e-8);
            } else if lambda.norm() < 1.0 - 1e-8 {
                assert!(res > 1e-8, "|lambda| = {}", lambda.norm());
            }
        }
        for b in p.bound_states() {
            assert!(b.vector.dotc(p.w()).norm() < 1e-12);
            let right = build_problem(g, Direction::Right).unwrap();
            assert!(b.vector.dotc(right.w()).norm() < 1e-12);
        }
        assert!(edgewalk::linalg::spectral_norm(p.g()) <= 1.0 + 1e-12);
    }
}

#[test]
fn shared_basis_states_evolve_identically() {
    let g = build_diamond(0.0);
    let basis = Arc::new(truncate(&g, 6));
    let a = edgewalk::assemble(&g, basis.clone()).unwrap();
    let b = edgewalk::assemble(&g, basis.clone()).unwrap();
    let psi = random_state(&a, 3);
    assert_eq!(a.apply(&psi).unwrap().amplitudes(), b.apply(&psi).unwrap().amplitudes());
}
