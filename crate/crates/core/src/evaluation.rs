//! Transductive semi-supervised and self-taught evaluation.
//!
//! A run draws `per_class` labelled samples from every class, trains a
//! downstream classifier on them and scores it on all remaining samples.
//! Splits depend only on the experiment seed and run index, so arms that
//! share a seed (raw vs. projected features, kNN vs. LR) see identical
//! splits.

use std::fmt;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FeatureMatrix};
use crate::ensemble;
use crate::error::{Error, Result};
use crate::geometry::nearest_rows;
use crate::linear::{self, TrainOptions};
use crate::par;
use crate::rng;
use crate::sampling::EpParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Raw,
    Ep,
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureKind::Raw => "raw",
            FeatureKind::Ep => "ep",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Classifier {
    Knn { k: usize },
    LogReg { options: TrainOptions },
}

impl Classifier {
    pub fn knn1() -> Self {
        Classifier::Knn { k: 1 }
    }

    pub fn logreg() -> Self {
        Classifier::LogReg {
            options: TrainOptions::default(),
        }
    }
}

impl fmt::Display for Classifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Classifier::Knn { k } => write!(f, "knn{k}"),
            Classifier::LogReg { .. } => f.write_str("logreg"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub per_class: usize,
    pub runs: usize,
    pub classifier: Classifier,
    pub feature: FeatureKind,
    pub seed: u64,
}

impl EvalConfig {
    pub fn new(per_class: usize, classifier: Classifier, feature: FeatureKind, seed: u64) -> Self {
        Self {
            per_class,
            runs: 5,
            classifier,
            feature,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitSpec {
    /// Labelled indices, ascending.
    pub labeled: Vec<usize>,
    /// Everything else, ascending.
    pub evaluation: Vec<usize>,
    pub per_class: usize,
    pub run_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub feature: FeatureKind,
    pub classifier: String,
    pub per_class: usize,
    pub runs: usize,
    pub per_run_precision: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); 0 for a single run.
    pub std: f64,
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Uniformly draws `per_class` indices of every class without replacement.
pub fn make_split(
    labels: &[usize],
    n_classes: usize,
    per_class: usize,
    run_seed: u64,
) -> Result<SplitSpec> {
    if per_class < 1 {
        return Err(Error::InvalidParams("per_class must be at least 1".into()));
    }
    let mut by_class = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        if l >= n_classes {
            return Err(Error::Validation(format!(
                "label {l} out of range for {n_classes} classes"
            )));
        }
        by_class[l].push(i);
    }
    let mut rng = rng::from_seed(run_seed);
    let mut is_labeled = vec![false; labels.len()];
    for (class, members) in by_class.iter().enumerate() {
        if members.len() < per_class {
            return Err(Error::InsufficientClassSamples {
                class,
                available: members.len(),
                requested: per_class,
            });
        }
        for pos in index::sample(&mut rng, members.len(), per_class) {
            is_labeled[members[pos]] = true;
        }
    }
    let (labeled, evaluation): (Vec<usize>, Vec<usize>) =
        (0..labels.len()).partition(|&i| is_labeled[i]);
    if evaluation.is_empty() {
        return Err(Error::InsufficientEvaluation);
    }
    Ok(SplitSpec {
        labeled,
        evaluation,
        per_class,
        run_seed,
    })
}

/// Majority vote over the `k` nearest training rows. Distance ties go to
/// the lower training index, vote ties to the lower class id.
pub fn knn_classify(
    train: &FeatureMatrix,
    train_labels: &[usize],
    test: &FeatureMatrix,
    k: usize,
) -> Result<Vec<usize>> {
    if k < 1 {
        return Err(Error::InvalidParams("k must be at least 1".into()));
    }
    if train.n_dims() != test.n_dims() {
        return Err(Error::DimensionMismatch {
            expected: train.n_dims(),
            actual: test.n_dims(),
        });
    }
    if train_labels.len() != train.n_samples() {
        return Err(Error::LengthMismatch {
            left: train.n_samples(),
            right: train_labels.len(),
        });
    }
    let n_classes = train_labels.iter().max().map_or(0, |m| m + 1);
    Ok(par::map_indexed(test.n_samples(), |i| {
        let mut votes = vec![0usize; n_classes];
        for (_, j) in nearest_rows(test.row(i), train, k) {
            votes[train_labels[j]] += 1;
        }
        // first maximum = lowest class id
        let mut best = 0;
        for (c, &v) in votes.iter().enumerate() {
            if v > votes[best] {
                best = c;
            }
        }
        best
    }))
}

/// Fraction of positions where `pred` equals `truth`.
pub fn precision(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::InsufficientEvaluation);
    }
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / pred.len() as f64)
}

/// Seed of the split used by run `run` of an experiment seeded with `seed`.
pub fn split_seed(seed: u64, run: usize) -> u64 {
    rng::derive_seed(rng::domain_seed(seed, "split"), run as u64)
}

fn run_once(
    features: &FeatureMatrix,
    labels: &[usize],
    n_classes: usize,
    cfg: &EvalConfig,
    run: usize,
) -> Result<f64> {
    let split = make_split(labels, n_classes, cfg.per_class, split_seed(cfg.seed, run))?;
    let train_x = features.select_rows(&split.labeled)?;
    let train_y: Vec<usize> = split.labeled.iter().map(|&i| labels[i]).collect();
    let test_x = features.select_rows(&split.evaluation)?;
    let truth: Vec<usize> = split.evaluation.iter().map(|&i| labels[i]).collect();
    let pred = match cfg.classifier {
        Classifier::Knn { k } => knn_classify(&train_x, &train_y, &test_x, k)?,
        Classifier::LogReg { options } => {
            linear::train(&train_x, &train_y, n_classes, &options)?.predict_all(&test_x)?
        }
    };
    precision(&pred, &truth)
}

/// Runs the split / train / score loop on an already prepared feature
/// matrix.
pub fn evaluate(
    features: &FeatureMatrix,
    labels: &[usize],
    n_classes: usize,
    cfg: &EvalConfig,
) -> Result<ExperimentReport> {
    if labels.len() != features.n_samples() {
        return Err(Error::LengthMismatch {
            left: features.n_samples(),
            right: labels.len(),
        });
    }
    if cfg.runs < 1 {
        return Err(Error::InvalidParams("runs must be at least 1".into()));
    }
    let per_run_precision = par::try_map_indexed(cfg.runs, |run| {
        run_once(features, labels, n_classes, cfg, run)
    })?;
    let (mean, std) = mean_std(&per_run_precision);
    Ok(ExperimentReport {
        feature: cfg.feature,
        classifier: cfg.classifier.to_string(),
        per_class: cfg.per_class,
        runs: cfg.runs,
        per_run_precision,
        mean,
        std,
    })
}

/// Raw features, or their projection through an ensemble fitted on
/// `fit_on` (which carries no labels by construction).
pub fn prepare_features(
    fit_on: &FeatureMatrix,
    target: &FeatureMatrix,
    params: &EpParams,
    feature: FeatureKind,
) -> Result<FeatureMatrix> {
    match feature {
        FeatureKind::Raw => Ok(target.clone()),
        FeatureKind::Ep => {
            let model = ensemble::fit(fit_on, params)?;
            ensemble::project_all(&model, target)
        }
    }
}

/// Transductive protocol: the ensemble is fitted on every sample of `d`
/// with labels withheld, then evaluated over `cfg.runs` random splits.
pub fn run_semi_supervised(
    d: &Dataset,
    params: &EpParams,
    cfg: &EvalConfig,
) -> Result<ExperimentReport> {
    let (labels, n_classes) = d.require_labels()?;
    let features = prepare_features(&d.features, &d.features, params, cfg.feature)?;
    evaluate(&features, labels, n_classes, cfg)
}

/// Self-taught protocol: the ensemble is fitted on `pool` only and then
/// used to project `target`. `cfg.feature` is ignored.
pub fn run_self_taught(
    pool: &Dataset,
    target: &Dataset,
    params: &EpParams,
    cfg: &EvalConfig,
) -> Result<ExperimentReport> {
    if pool.features.n_dims() != target.features.n_dims() {
        return Err(Error::DimensionMismatch {
            expected: target.features.n_dims(),
            actual: pool.features.n_dims(),
        });
    }
    let (labels, n_classes) = target.require_labels()?;
    let features = prepare_features(&pool.features, &target.features, params, FeatureKind::Ep)?;
    let cfg = EvalConfig {
        feature: FeatureKind::Ep,
        ..*cfg
    };
    evaluate(&features, labels, n_classes, &cfg)
}
