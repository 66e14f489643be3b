//! Benchmark fixtures shared by the criterion targets.

use cryptodbn::synthetic::{random_2tbn, sample_2tbn};
use cryptodbn::{Direction, DirectionMatrix};

/// Sampled training matrix from a random 2TBN with `n_vars` variables.
pub fn sampled_matrix(n_vars: usize, rows: usize, seed: u64) -> DirectionMatrix {
    sample_2tbn(&random_2tbn(n_vars, 5, seed), rows, seed + 1)
}

/// AR(1) series with coefficient `phi` driven by a fixed pseudo-random sequence.
pub fn ar1_series(n: usize, phi: f64) -> Vec<f64> {
    let mut state: u64 = 0x9e37_79b9_7f4a_7c15;
    let mut noise = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let mut out = Vec::with_capacity(n);
    let mut x = 0.0;
    for _ in 0..n {
        x = phi * x + noise();
        out.push(x);
    }
    out
}

/// Every other variable observed Up across all slices; the rest hidden.
pub fn half_evidence(n_vars: usize, t_slices: usize, target: usize) -> Vec<(usize, usize, Direction)> {
    (0..t_slices)
        .flat_map(|s| (0..n_vars).filter(move |&v| v % 2 == 1 && v != target).map(move |v| (s, v, Direction::Up)))
        .collect()
}
