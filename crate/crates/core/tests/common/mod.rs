#![allow(dead_code)]

use edgewalk::oracles::random_grover_graph;
use edgewalk::TailedGraph;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const CORPUS_SEED: u64 = 0x5eed_2024;
pub const CORPUS_SIZE: usize = 100;
pub const CORPUS_MAX_VERTICES: usize = 12;

/// Fixed corpus of random Grover graphs with random phase shifters.
pub fn corpus() -> Vec<TailedGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(CORPUS_SEED);
    (0..CORPUS_SIZE)
        .map(|_| random_grover_graph(&mut rng, CORPUS_MAX_VERTICES))
        .collect()
}

pub fn circle_point(k: usize, n: usize) -> f64 {
    std::f64::consts::TAU * (k as f64 + 0.5) / n as f64
}
