//! Measurement tools for the two properties the method relies on.
//!
//! * [`label_cooccurrence_curve`]: how often the k-th nearest neighbour of a
//!   sample shares its class, for k = 1..=k_max.
//! * [`ensemble_noise_simulation`]: accuracy of a majority vote over `T`
//!   classifiers, each trained on a random subsample with a fixed fraction
//!   of corrupted labels.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FeatureMatrix};
use crate::error::{Error, Result};
use crate::geometry::{by_distance_then_index, euclidean};
use crate::linear::{self, TrainOptions};
use crate::par;
use crate::rng;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Averaging {
    /// Mean over the samples of each class, then mean over classes.
    #[default]
    PerClass,
    /// Plain mean over all samples.
    PerImage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CooccurrenceCurve {
    /// `p[k - 1]` is the probability that the k-th neighbour shares the
    /// query's class.
    pub p: Vec<f64>,
}

/// For every sample the other samples are ranked by (distance, index).
pub fn label_cooccurrence_curve(
    d: &Dataset,
    k_max: usize,
    averaging: Averaging,
) -> Result<CooccurrenceCurve> {
    let (labels, n_classes) = d.require_labels()?;
    let m = &d.features;
    let n = m.n_samples();
    if k_max < 1 || k_max >= n {
        return Err(Error::InvalidParams(format!(
            "k_max {k_max} must lie in 1..{n}"
        )));
    }
    let hits: Vec<Vec<bool>> = par::map_indexed(n, |i| {
        let q = m.row(i);
        let mut others: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (euclidean(q, m.row(j)), j))
            .collect();
        others.select_nth_unstable_by(k_max - 1, by_distance_then_index);
        others.truncate(k_max);
        others.sort_unstable_by(by_distance_then_index);
        others
            .iter()
            .map(|&(_, j)| labels[j] == labels[i])
            .collect()
    });

    let p = match averaging {
        Averaging::PerImage => (0..k_max)
            .map(|k| hits.iter().filter(|h| h[k]).count() as f64 / n as f64)
            .collect(),
        Averaging::PerClass => {
            let mut class_size = vec![0usize; n_classes];
            let mut class_hits = vec![0usize; n_classes * k_max];
            for (i, h) in hits.iter().enumerate() {
                let c = labels[i];
                class_size[c] += 1;
                for (k, &hit) in h.iter().enumerate() {
                    class_hits[c * k_max + k] += usize::from(hit);
                }
            }
            (0..k_max)
                .map(|k| {
                    (0..n_classes)
                        .map(|c| class_hits[c * k_max + k] as f64 / class_size[c] as f64)
                        .sum::<f64>()
                        / n_classes as f64
                })
                .collect()
        }
    };
    Ok(CooccurrenceCurve { p })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reassign {
    /// Uniform over all classes; a selected label may keep its value.
    #[default]
    AnyClass,
    /// Uniform over the other `C - 1` classes; every selected label changes.
    OtherClasses,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSimConfig {
    /// Fraction `R` of each weak training set selected for relabelling.
    pub noise_rate: f64,
    pub subsample_fraction: f64,
    /// Fraction of the dataset held as the training pool; the rest is test.
    pub train_fraction: f64,
    pub reassign: Reassign,
    pub classifier: TrainOptions,
    pub seed: u64,
}

impl NoiseSimConfig {
    pub fn new(noise_rate: f64, seed: u64) -> Self {
        Self {
            noise_rate,
            subsample_fraction: 0.3,
            train_fraction: 0.5,
            reassign: Reassign::default(),
            classifier: TrainOptions::default(),
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParams(what.to_string()));
        if !(0.0..1.0).contains(&self.noise_rate) {
            return bad("noise rate must lie in [0, 1)");
        }
        if !(self.subsample_fraction > 0.0 && self.subsample_fraction <= 1.0) {
            return bad("subsample fraction must lie in (0, 1]");
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad("train fraction must lie in (0, 1)");
        }
        self.classifier.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseCurve {
    pub noise_rate: f64,
    /// `(T, accuracy of the T-classifier majority vote)`.
    pub points: Vec<(usize, f64)>,
}

/// Relabels exactly `round(rate * len)` positions chosen uniformly at
/// random and returns those positions, ascending.
pub fn corrupt_labels<R: Rng + ?Sized>(
    labels: &mut [usize],
    n_classes: usize,
    rate: f64,
    mode: Reassign,
    rng: &mut R,
) -> Vec<usize> {
    let count = ((rate * labels.len() as f64).round() as usize).min(labels.len());
    let mut picked = index::sample(rng, labels.len(), count).into_vec();
    picked.sort_unstable();
    for &pos in &picked {
        labels[pos] = match mode {
            Reassign::AnyClass => rng.random_range(0..n_classes),
            Reassign::OtherClasses if n_classes > 1 => {
                let draw = rng.random_range(0..n_classes - 1);
                if draw >= labels[pos] {
                    draw + 1
                } else {
                    draw
                }
            }
            Reassign::OtherClasses => labels[pos],
        };
    }
    picked
}

/// Fixed held-out split: a seeded permutation, the first
/// `round(train_fraction * N)` samples train.
pub fn holdout_split(n: usize, train_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = rng::from_seed(rng::domain_seed(seed, "holdout"));
    let perm = index::sample(&mut rng, n, n).into_vec();
    let n_train = ((train_fraction * n as f64).round() as usize).clamp(1, n - 1);
    (perm[..n_train].to_vec(), perm[n_train..].to_vec())
}

/// Trains one classifier on a weak training set and returns its test
/// predictions. Classes absent from the weak set are never predicted.
fn weak_trial(
    train_x: &FeatureMatrix,
    train_y: &[usize],
    test_x: &FeatureMatrix,
    n_classes: usize,
    cfg: &NoiseSimConfig,
    t: usize,
) -> Result<Vec<usize>> {
    let mut rng = rng::stream(rng::domain_seed(cfg.seed, "weak-set"), t as u64);
    let n = train_y.len();
    let size = ((cfg.subsample_fraction * n as f64).round() as usize).clamp(1, n);
    let rows = index::sample(&mut rng, n, size).into_vec();
    let mut y: Vec<usize> = rows.iter().map(|&i| train_y[i]).collect();
    corrupt_labels(&mut y, n_classes, cfg.noise_rate, cfg.reassign, &mut rng);

    let mut present: Vec<usize> = y.clone();
    present.sort_unstable();
    present.dedup();
    if present.len() == 1 {
        return Ok(vec![present[0]; test_x.n_samples()]);
    }
    let mut to_local = vec![usize::MAX; n_classes];
    for (local, &c) in present.iter().enumerate() {
        to_local[c] = local;
    }
    let local_y: Vec<usize> = y.iter().map(|&c| to_local[c]).collect();
    let x = train_x.select_rows(&rows)?;
    let model = linear::train(&x, &local_y, present.len(), &cfg.classifier)?;
    Ok(model
        .predict_all(test_x)?
        .into_iter()
        .map(|l| present[l])
        .collect())
}

/// Majority-vote accuracy on the held-out part of `d` after `T` weak
/// classifiers, for every `T` in `t_grid`. Vote ties go to the lowest class.
pub fn ensemble_noise_simulation(
    d: &Dataset,
    cfg: &NoiseSimConfig,
    t_grid: &[usize],
) -> Result<NoiseCurve> {
    let (labels, n_classes) = d.require_labels()?;
    cfg.validate()?;
    if t_grid.is_empty() || t_grid.contains(&0) {
        return Err(Error::InvalidParams(
            "T grid must be non-empty and positive".into(),
        ));
    }
    if d.n_samples() < 2 {
        return Err(Error::InvalidParams("need at least 2 samples".into()));
    }
    let (train_idx, test_idx) = holdout_split(d.n_samples(), cfg.train_fraction, cfg.seed);
    let train_x = d.features.select_rows(&train_idx)?;
    let train_y: Vec<usize> = train_idx.iter().map(|&i| labels[i]).collect();
    let test_x = d.features.select_rows(&test_idx)?;
    let truth: Vec<usize> = test_idx.iter().map(|&i| labels[i]).collect();

    let t_max = *t_grid.iter().max().unwrap();
    let predictions = par::try_map_indexed(t_max, |t| {
        weak_trial(&train_x, &train_y, &test_x, n_classes, cfg, t)
    })?;

    let mut votes = vec![0usize; truth.len() * n_classes];
    let mut accuracy_at = vec![f64::NAN; t_max + 1];
    for (t, pred) in predictions.iter().enumerate() {
        for (i, &p) in pred.iter().enumerate() {
            votes[i * n_classes + p] += 1;
        }
        let correct = votes
            .chunks_exact(n_classes)
            .zip(&truth)
            .filter(|(v, &y)| mode(v) == y)
            .count();
        accuracy_at[t + 1] = correct as f64 / truth.len() as f64;
    }
    Ok(NoiseCurve {
        noise_rate: cfg.noise_rate,
        points: t_grid.iter().map(|&t| (t, accuracy_at[t])).collect(),
    })
}

fn mode(votes: &[usize]) -> usize {
    let mut best = 0;
    for (c, &v) in votes.iter().enumerate() {
        if v > votes[best] {
            best = c;
        }
    }
    best
}
