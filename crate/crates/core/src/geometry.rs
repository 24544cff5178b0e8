//! Euclidean distances and exact brute-force neighbour queries.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMetric {
    #[default]
    Euclidean,
}

pub fn distance(a: &[f64], b: &[f64], metric: DistanceMetric) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(match metric {
        DistanceMetric::Euclidean => euclidean(a, b),
    })
}

/// Euclidean distance without the length check.
#[inline]
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    squared_euclidean(a, b).sqrt()
}

#[inline]
pub fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// Mean distance over all unordered pairs of distinct positions in
/// `indices`.
pub fn avg_pairwise_distance(indices: &[usize], m: &FeatureMatrix) -> Result<f64> {
    if indices.len() < 2 {
        return Err(Error::DegenerateSet(indices.len()));
    }
    check_indices(indices, m.n_samples())?;
    Ok(pairwise_mean_unchecked(indices, m))
}

pub(crate) fn pairwise_mean_unchecked(indices: &[usize], m: &FeatureMatrix) -> f64 {
    let mut total = 0.0;
    for (a, &i) in indices.iter().enumerate() {
        let xi = m.row(i);
        for &j in &indices[a + 1..] {
            total += euclidean(xi, m.row(j));
        }
    }
    let r = indices.len() as f64;
    total / (r * (r - 1.0) / 2.0)
}

fn check_indices(indices: &[usize], len: usize) -> Result<()> {
    match indices.iter().find(|&&i| i >= len) {
        Some(&index) => Err(Error::IndexOutOfRange { index, len }),
        None => Ok(()),
    }
}

/// Total order used for every neighbour ranking: distance, then index.
#[inline]
pub(crate) fn by_distance_then_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// The `n` rows closest to row `query_index`, nearest first. The query is
/// always first; remaining ties on distance go to the lower index.
pub fn nearest_neighbors(query_index: usize, m: &FeatureMatrix, n: usize) -> Result<Vec<usize>> {
    let len = m.n_samples();
    if query_index >= len {
        return Err(Error::IndexOutOfRange {
            index: query_index,
            len,
        });
    }
    if n == 0 || n > len {
        return Err(Error::InvalidN { n, n_samples: len });
    }
    let q = m.row(query_index);
    let mut others: Vec<(f64, usize)> = (0..len)
        .filter(|&j| j != query_index)
        .map(|j| (euclidean(q, m.row(j)), j))
        .collect();
    let keep = n - 1;
    if keep > 0 && keep < others.len() {
        others.select_nth_unstable_by(keep - 1, by_distance_then_index);
    }
    others.truncate(keep);
    others.sort_unstable_by(by_distance_then_index);
    let mut out = Vec::with_capacity(n);
    out.push(query_index);
    out.extend(others.into_iter().map(|(_, j)| j));
    Ok(out)
}

/// Indices of the `k` rows of `reference` nearest to `point`, nearest
/// first, ties to the lower index.
pub fn nearest_rows(point: &[f64], reference: &FeatureMatrix, k: usize) -> Vec<(f64, usize)> {
    let mut all: Vec<(f64, usize)> = reference
        .rows()
        .enumerate()
        .map(|(j, row)| (euclidean(point, row), j))
        .collect();
    let k = k.min(all.len());
    if k > 0 && k < all.len() {
        all.select_nth_unstable_by(k - 1, by_distance_then_index);
    }
    all.truncate(k);
    all.sort_unstable_by(by_distance_then_index);
    all
}
