//! k-means (k-means++ seeding, Lloyd iterations) and purity scoring.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FeatureMatrix};
use crate::error::{Error, Result};
use crate::evaluation::{mean_std, prepare_features, FeatureKind};
use crate::geometry::squared_euclidean;
use crate::par;
use crate::rng::{self, EpRng};
use crate::sampling::EpParams;

pub const DEFAULT_MAX_ITERS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringResult {
    pub assignments: Vec<usize>,
    pub k: usize,
    /// Within-cluster sum of squared distances to the cluster means.
    pub inertia: f64,
    pub iterations: usize,
    /// Inertia after every centroid update; non-increasing.
    pub inertia_trace: Vec<f64>,
}

/// Best of `restarts` k-means runs by inertia. Restart `i` is seeded with
/// `derive_seed(seed, i)`; equal inertia goes to the lower restart.
pub fn kmeans(
    m: &FeatureMatrix,
    k: usize,
    max_iters: usize,
    restarts: usize,
    seed: u64,
) -> Result<ClusteringResult> {
    if k < 1 || k > m.n_samples() {
        return Err(Error::InvalidK {
            k,
            n_samples: m.n_samples(),
        });
    }
    if restarts < 1 || max_iters < 1 {
        return Err(Error::InvalidParams(
            "restarts and max_iters must be at least 1".into(),
        ));
    }
    let results = par::map_indexed(restarts, |i| {
        lloyd(m, k, max_iters, &mut rng::stream(seed, i as u64))
    });
    let mut best = 0;
    for (i, r) in results.iter().enumerate() {
        if r.inertia < results[best].inertia {
            best = i;
        }
    }
    Ok(results.into_iter().nth(best).unwrap())
}

fn plus_plus_seeds(m: &FeatureMatrix, k: usize, rng: &mut EpRng) -> Vec<usize> {
    let n = m.n_samples();
    let mut seeds = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = m
        .rows()
        .map(|row| squared_euclidean(row, m.row(seeds[0])))
        .collect();
    while seeds.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 && target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            // guard against rounding landing on an already chosen point
            if d2[pick] == 0.0 {
                pick = d2.iter().rposition(|&w| w > 0.0).unwrap();
            }
            pick
        } else {
            // every point coincides with a seed; any unused index will do
            let unused: Vec<usize> = (0..n).filter(|i| !seeds.contains(i)).collect();
            unused[rng.random_range(0..unused.len())]
        };
        seeds.push(next);
        for (i, row) in m.rows().enumerate() {
            d2[i] = d2[i].min(squared_euclidean(row, m.row(next)));
        }
    }
    seeds
}

fn assign(m: &FeatureMatrix, centroids: &[f64], k: usize, out: &mut [usize]) -> bool {
    let d = m.n_dims();
    let mut changed = false;
    for (i, row) in m.rows().enumerate() {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for c in 0..k {
            let dist = squared_euclidean(row, &centroids[c * d..(c + 1) * d]);
            if dist < best_d {
                best_d = dist;
                best = c;
            }
        }
        if out[i] != best {
            out[i] = best;
            changed = true;
        }
    }
    changed
}

/// Moves the point farthest from its centroid into each empty cluster.
fn repair_empty(m: &FeatureMatrix, centroids: &mut [f64], k: usize, assignments: &mut [usize]) {
    let d = m.n_dims();
    let mut sizes = vec![0usize; k];
    assignments.iter().for_each(|&a| sizes[a] += 1);
    for empty in 0..k {
        if sizes[empty] > 0 {
            continue;
        }
        let mut far = None;
        let mut far_d = -1.0;
        for (i, row) in m.rows().enumerate() {
            let a = assignments[i];
            if sizes[a] < 2 {
                continue;
            }
            let dist = squared_euclidean(row, &centroids[a * d..(a + 1) * d]);
            if dist > far_d {
                far_d = dist;
                far = Some(i);
            }
        }
        let p = far.expect("k <= n_samples leaves a donor cluster");
        sizes[assignments[p]] -= 1;
        sizes[empty] = 1;
        assignments[p] = empty;
        centroids[empty * d..(empty + 1) * d].copy_from_slice(m.row(p));
    }
}

fn update_means(m: &FeatureMatrix, k: usize, assignments: &[usize], centroids: &mut [f64]) -> f64 {
    let d = m.n_dims();
    let mut counts = vec![0usize; k];
    centroids.fill(0.0);
    for (row, &a) in m.rows().zip(assignments) {
        counts[a] += 1;
        for (c, v) in centroids[a * d..(a + 1) * d].iter_mut().zip(row) {
            *c += v;
        }
    }
    for (c, &n) in counts.iter().enumerate() {
        let inv = 1.0 / n as f64;
        centroids[c * d..(c + 1) * d]
            .iter_mut()
            .for_each(|v| *v *= inv);
    }
    m.rows()
        .zip(assignments)
        .map(|(row, &a)| squared_euclidean(row, &centroids[a * d..(a + 1) * d]))
        .sum()
}

fn lloyd(m: &FeatureMatrix, k: usize, max_iters: usize, rng: &mut EpRng) -> ClusteringResult {
    let d = m.n_dims();
    let mut centroids = Vec::with_capacity(k * d);
    for s in plus_plus_seeds(m, k, rng) {
        centroids.extend_from_slice(m.row(s));
    }
    let mut assignments = vec![usize::MAX; m.n_samples()];
    assign(m, &centroids, k, &mut assignments);
    repair_empty(m, &mut centroids, k, &mut assignments);
    let mut trace = vec![update_means(m, k, &assignments, &mut centroids)];
    let mut iterations = 1;
    while iterations < max_iters {
        let changed = assign(m, &centroids, k, &mut assignments);
        if !changed {
            break;
        }
        repair_empty(m, &mut centroids, k, &mut assignments);
        trace.push(update_means(m, k, &assignments, &mut centroids));
        iterations += 1;
    }
    ClusteringResult {
        assignments,
        k,
        inertia: *trace.last().unwrap(),
        iterations,
        inertia_trace: trace,
    }
}

/// Fraction of samples that belong to the dominant class of their cluster.
pub fn purity(assignments: &[usize], labels: &[usize]) -> Result<f64> {
    if assignments.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: assignments.len(),
            right: labels.len(),
        });
    }
    if assignments.is_empty() {
        return Err(Error::InvalidParams("purity of an empty assignment".into()));
    }
    let n_clusters = assignments.iter().max().unwrap() + 1;
    let n_classes = labels.iter().max().unwrap() + 1;
    let mut table = vec![0usize; n_clusters * n_classes];
    for (&a, &l) in assignments.iter().zip(labels) {
        table[a * n_classes + l] += 1;
    }
    let dominant: usize = table
        .chunks_exact(n_classes)
        .map(|row| row.iter().copied().max().unwrap())
        .sum();
    Ok(dominant as f64 / assignments.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub feature: FeatureKind,
    pub restarts: usize,
    /// Independent k-means seeds; purity is reported per seed and averaged.
    pub n_seeds: usize,
    pub max_iters: usize,
    pub seed: u64,
}

impl ClusterConfig {
    pub fn new(feature: FeatureKind, seed: u64) -> Self {
        Self {
            feature,
            restarts: 10,
            n_seeds: 1,
            max_iters: DEFAULT_MAX_ITERS,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub feature: FeatureKind,
    pub k: usize,
    pub restarts: usize,
    pub per_seed_purity: Vec<f64>,
    pub per_seed_inertia: Vec<f64>,
    pub mean_purity: f64,
    pub std_purity: f64,
    /// Assignments of the first seed.
    #[serde(skip)]
    pub assignments: Vec<usize>,
}

/// Clusters raw or projected features into `C` groups. Labels are only
/// used for scoring.
pub fn run_clustering_experiment(
    d: &Dataset,
    params: &EpParams,
    cfg: &ClusterConfig,
) -> Result<ClusterReport> {
    let (labels, n_classes) = d.require_labels()?;
    let features = prepare_features(&d.features, &d.features, params, cfg.feature)?;
    cluster_features(&features, labels, n_classes, cfg)
}

/// Scoring loop of [`run_clustering_experiment`] on prepared features.
pub fn cluster_features(
    features: &FeatureMatrix,
    labels: &[usize],
    n_classes: usize,
    cfg: &ClusterConfig,
) -> Result<ClusterReport> {
    if cfg.n_seeds < 1 {
        return Err(Error::InvalidParams("need at least one seed".into()));
    }
    let base = rng::domain_seed(cfg.seed, "kmeans");
    let mut per_seed_purity = Vec::with_capacity(cfg.n_seeds);
    let mut per_seed_inertia = Vec::with_capacity(cfg.n_seeds);
    let mut first = None;
    for s in 0..cfg.n_seeds {
        let res = kmeans(
            features,
            n_classes,
            cfg.max_iters,
            cfg.restarts,
            rng::derive_seed(base, s as u64),
        )?;
        per_seed_purity.push(purity(&res.assignments, labels)?);
        per_seed_inertia.push(res.inertia);
        first.get_or_insert(res.assignments);
    }
    let (mean_purity, std_purity) = mean_std(&per_seed_purity);
    Ok(ClusterReport {
        feature: cfg.feature,
        k: n_classes,
        restarts: cfg.restarts,
        per_seed_purity,
        per_seed_inertia,
        mean_purity,
        std_purity,
        assignments: first.unwrap(),
    })
}
