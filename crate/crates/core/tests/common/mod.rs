#![allow(dead_code)]

use ensemble_projection::FeatureMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> FeatureMatrix {
    let values = (0..n * d).map(|_| rng.random_range(-3.0..3.0)).collect();
    FeatureMatrix::new(n, d, values).unwrap()
}

/// Matrix with coordinates on a coarse grid, so exact distance ties occur.
pub fn tied_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> FeatureMatrix {
    let values = (0..n * d).map(|_| rng.random_range(0..4) as f64).collect();
    FeatureMatrix::new(n, d, values).unwrap()
}

/// Plain scalar-loop Euclidean distance.
pub fn oracle_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    s.sqrt()
}

/// Every other row sorted by (distance, index) with a full sort.
pub fn oracle_ranking(m: &FeatureMatrix, q: usize) -> Vec<usize> {
    let mut all: Vec<(f64, usize)> = (0..m.n_samples())
        .filter(|&j| j != q)
        .map(|j| (oracle_distance(m.row(q), m.row(j)), j))
        .collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    all.into_iter().map(|(_, j)| j).collect()
}
