//! Gaussian blob datasets with known class structure.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FeatureMatrix};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlobSpec {
    pub n_classes: usize,
    pub samples_per_class: usize,
    pub n_dims: usize,
    /// Side of the hypercube class centres are drawn from.
    pub center_spread: f64,
    /// Per-coordinate standard deviation around a centre. Zero collapses
    /// every class onto its centre.
    pub within_std: f64,
    pub seed: u64,
}

impl BlobSpec {
    pub fn new(
        n_classes: usize,
        samples_per_class: usize,
        n_dims: usize,
        center_spread: f64,
        within_std: f64,
        seed: u64,
    ) -> Self {
        Self {
            n_classes,
            samples_per_class,
            n_dims,
            center_spread,
            within_std,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_classes == 0 || self.samples_per_class == 0 || self.n_dims == 0 {
            return Err(Error::InvalidParams("blob counts must be positive".into()));
        }
        if !(self.center_spread > 0.0 && self.center_spread.is_finite()) {
            return Err(Error::InvalidParams(
                "center_spread must be positive".into(),
            ));
        }
        if !(self.within_std >= 0.0 && self.within_std.is_finite()) {
            return Err(Error::InvalidParams(
                "within_std must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Centres drawn by [`make_blobs`] for `spec`, row-major.
pub fn blob_centers(spec: &BlobSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let mut rng = rng::from_seed(rng::domain_seed(spec.seed, "centers"));
    Ok((0..spec.n_classes * spec.n_dims)
        .map(|_| rng.random::<f64>() * spec.center_spread)
        .collect())
}

/// Samples are grouped by class: rows `c * samples_per_class ..` belong to
/// class `c`.
pub fn make_blobs(spec: &BlobSpec) -> Result<Dataset> {
    let centers = blob_centers(spec)?;
    let mut rng = rng::from_seed(rng::domain_seed(spec.seed, "samples"));
    let noise =
        Normal::new(0.0, spec.within_std).map_err(|e| Error::InvalidParams(e.to_string()))?;
    let d = spec.n_dims;
    let n = spec.n_classes * spec.samples_per_class;
    let mut values = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for c in 0..spec.n_classes {
        let center = &centers[c * d..(c + 1) * d];
        for _ in 0..spec.samples_per_class {
            values.extend(center.iter().map(|&mu| mu + noise.sample(&mut rng)));
            labels.push(c);
        }
    }
    Dataset::labeled(
        FeatureMatrix::new(n, d, values)?,
        labels,
        Some(spec.n_classes),
    )
}
