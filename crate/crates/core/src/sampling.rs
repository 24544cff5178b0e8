//! Max-Min sampling of pseudo-labelled prototype sets.
//!
//! The max step draws `m` random hypotheses of `r` distinct samples and
//! keeps the one with the largest average pairwise distance (the skeleton).
//! The min step grows every skeleton seed into a prototype made of its `n`
//! nearest neighbours, all sharing the seed's pseudo-label.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result};
use crate::geometry::{nearest_neighbors, pairwise_mean_unchecked};
use crate::linear::TrainOptions;
use crate::rng::{self, EpRng};

/// Ensemble projection hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpParams {
    /// Number of prototype sets / projection functions (`T`).
    pub n_trials: usize,
    /// Prototypes per set, i.e. classes per projection (`r`).
    pub n_prototypes: usize,
    /// Samples per prototype, seed included (`n`).
    pub prototype_size: usize,
    /// Random skeleton hypotheses drawn per trial (`m`).
    pub n_hypotheses: usize,
    pub seed: u64,
    /// Training options of every projection function.
    pub base_learner: TrainOptions,
}

impl EpParams {
    pub fn new(
        n_trials: usize,
        n_prototypes: usize,
        prototype_size: usize,
        n_hypotheses: usize,
        seed: u64,
    ) -> Self {
        Self {
            n_trials,
            n_prototypes,
            prototype_size,
            n_hypotheses,
            seed,
            base_learner: TrainOptions::default(),
        }
    }

    /// T=100, r=30, n=6, m=50: a 3000-dimensional projection.
    pub fn paper_defaults(seed: u64) -> Self {
        Self::new(100, 30, 6, 50, seed)
    }

    /// T=50, r=10, n=4, m=20, for quick runs on small data.
    pub fn desk(seed: u64) -> Self {
        Self::new(50, 10, 4, 20, seed)
    }

    pub fn output_dims(&self) -> usize {
        self.n_trials * self.n_prototypes
    }

    pub fn validate_for(&self, n_samples: usize) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidParams(msg));
        if self.n_trials < 1 {
            return fail("trial count must be at least 1".into());
        }
        if self.n_prototypes < 2 {
            return fail("need at least 2 prototypes per set".into());
        }
        if self.prototype_size < 1 || self.n_hypotheses < 1 {
            return fail("prototype size and hypothesis count must be at least 1".into());
        }
        if self.n_prototypes > n_samples || self.prototype_size > n_samples {
            return fail(format!(
                "r={} and n={} must not exceed the {n_samples} available samples",
                self.n_prototypes, self.prototype_size
            ));
        }
        self.base_learner.validate()
    }

    /// Independent generator of trial `t`.
    pub fn trial_rng(&self, t: usize) -> EpRng {
        rng::stream(self.seed, t as u64)
    }
}

/// One trial's surrogate training set: `r` prototypes of `n` members each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrototypeSet {
    skeleton: Vec<usize>,
    /// `(sample index, pseudo-label)`, grouped by pseudo-label.
    members: Vec<(usize, usize)>,
    prototype_size: usize,
}

impl PrototypeSet {
    pub fn skeleton(&self) -> &[usize] {
        &self.skeleton
    }

    pub fn members(&self) -> &[(usize, usize)] {
        &self.members
    }

    pub fn n_prototypes(&self) -> usize {
        self.skeleton.len()
    }

    pub fn prototype_size(&self) -> usize {
        self.prototype_size
    }

    /// Member indices of prototype `k`, nearest to its seed first.
    pub fn prototype(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        self.members[k * self.prototype_size..(k + 1) * self.prototype_size]
            .iter()
            .map(|&(i, _)| i)
    }

    pub fn sample_indices(&self) -> Vec<usize> {
        self.members.iter().map(|&(i, _)| i).collect()
    }

    pub fn pseudo_labels(&self) -> Vec<usize> {
        self.members.iter().map(|&(_, c)| c).collect()
    }
}

/// Max step: best of `n_hypotheses` random index sets by average pairwise
/// distance. The first-drawn hypothesis wins ties.
pub fn sample_skeleton<R: Rng + ?Sized>(
    m: &FeatureMatrix,
    r: usize,
    n_hypotheses: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    sample_skeleton_observed(m, r, n_hypotheses, rng, |_, _| {})
}

/// [`sample_skeleton`] that reports every drawn hypothesis and its score to
/// `observe`, in draw order.
pub fn sample_skeleton_observed<R, F>(
    m: &FeatureMatrix,
    r: usize,
    n_hypotheses: usize,
    rng: &mut R,
    mut observe: F,
) -> Result<Vec<usize>>
where
    R: Rng + ?Sized,
    F: FnMut(&[usize], f64),
{
    let n_samples = m.n_samples();
    if r < 2 || r > n_samples {
        return Err(Error::InvalidParams(format!(
            "skeleton size {r} must lie in 2..={n_samples}"
        )));
    }
    if n_hypotheses < 1 {
        return Err(Error::InvalidParams("need at least one hypothesis".into()));
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..n_hypotheses {
        let hypothesis = index::sample(rng, n_samples, r).into_vec();
        let score = pairwise_mean_unchecked(&hypothesis, m);
        observe(&hypothesis, score);
        if best.as_ref().is_none_or(|(b, _)| score > *b) {
            best = Some((score, hypothesis));
        }
    }
    Ok(best.map(|(_, h)| h).unwrap())
}

/// Min step: prototype `k` is the `n` nearest neighbours of `skeleton[k]`,
/// all labelled `k`.
pub fn expand_prototypes(m: &FeatureMatrix, skeleton: &[usize], n: usize) -> Result<PrototypeSet> {
    let mut seen = skeleton.to_vec();
    seen.sort_unstable();
    if seen.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidParams(
            "skeleton indices must be distinct".into(),
        ));
    }
    if n < 1 || n > m.n_samples() {
        return Err(Error::InvalidParams(format!(
            "prototype size {n} must lie in 1..={}",
            m.n_samples()
        )));
    }
    let mut members = Vec::with_capacity(skeleton.len() * n);
    for (label, &seed) in skeleton.iter().enumerate() {
        let neighbours = nearest_neighbors(seed, m, n)?;
        members.extend(neighbours.into_iter().map(|i| (i, label)));
    }
    Ok(PrototypeSet {
        skeleton: skeleton.to_vec(),
        members,
        prototype_size: n,
    })
}

pub fn max_min_sample<R: Rng + ?Sized>(
    m: &FeatureMatrix,
    params: &EpParams,
    rng: &mut R,
) -> Result<PrototypeSet> {
    params.validate_for(m.n_samples())?;
    let skeleton = sample_skeleton(m, params.n_prototypes, params.n_hypotheses, rng)?;
    expand_prototypes(m, &skeleton, params.prototype_size)
}

/// Prototype set of trial `t`, drawn from the trial's own stream.
pub fn sample_trial(m: &FeatureMatrix, params: &EpParams, t: usize) -> Result<PrototypeSet> {
    max_min_sample(m, params, &mut params.trial_rng(t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(points: &[f64]) -> FeatureMatrix {
        FeatureMatrix::new(points.len(), 1, points.to_vec()).unwrap()
    }

    #[test]
    fn full_skeleton_when_r_equals_n_samples() {
        let m = line(&[0.0, 1.0, 3.0, 7.0]);
        let mut sk = sample_skeleton(&m, 4, 9, &mut rng::from_seed(1)).unwrap();
        sk.sort_unstable();
        assert_eq!(sk, vec![0, 1, 2, 3]);
    }

    #[test]
    fn single_hypothesis_is_returned_as_drawn() {
        let m = line(&[0.0, 1.0, 3.0, 7.0, 8.0, 9.0]);
        let mut drawn = Vec::new();
        let sk = sample_skeleton_observed(&m, 3, 1, &mut rng::from_seed(5), |h, _| {
            drawn.push(h.to_vec())
        })
        .unwrap();
        assert_eq!(drawn, vec![sk]);
    }

    #[test]
    fn seed_only_prototypes() {
        let m = line(&[0.0, 1.0, 3.0, 7.0]);
        let p = expand_prototypes(&m, &[3, 1], 1).unwrap();
        assert_eq!(p.members(), &[(3, 0), (1, 1)]);
    }

    #[test]
    fn two_obvious_clusters() {
        let m = line(&[0.0, 0.1, 5.0, 5.1]);
        let p = expand_prototypes(&m, &[0, 2], 2).unwrap();
        assert_eq!(p.prototype(0).collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(p.prototype(1).collect::<Vec<_>>(), vec![2, 3]);
        assert_eq!(p.pseudo_labels(), vec![0, 0, 1, 1]);
    }

    #[test]
    fn composition_on_four_points() {
        let m = line(&[0.0, 0.1, 5.0, 5.1]);
        let params = EpParams::new(1, 2, 2, 10, 3);
        let got = max_min_sample(&m, &params, &mut params.trial_rng(0)).unwrap();
        let mut rng = params.trial_rng(0);
        let sk = sample_skeleton(&m, 2, 10, &mut rng).unwrap();
        assert_eq!(got, expand_prototypes(&m, &sk, 2).unwrap());
        // the widest pair must straddle the two clusters
        assert!(sk.iter().any(|&i| i < 2) && sk.iter().any(|&i| i >= 2));
        assert_eq!(got, sample_trial(&m, &params, 0).unwrap());
    }

    #[test]
    fn invalid_inputs() {
        let m = line(&[0.0, 1.0, 2.0]);
        assert!(sample_skeleton(&m, 4, 1, &mut rng::from_seed(0)).is_err());
        assert!(sample_skeleton(&m, 1, 1, &mut rng::from_seed(0)).is_err());
        assert!(expand_prototypes(&m, &[0, 0], 1).is_err());
        assert!(expand_prototypes(&m, &[0, 1], 4).is_err());
        let bad = EpParams::new(0, 2, 1, 1, 0);
        assert!(bad.validate_for(3).is_err());
        assert!(EpParams::new(1, 2, 4, 1, 0).validate_for(3).is_err());
    }
}
