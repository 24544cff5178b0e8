//! Fitting the projection ensemble and mapping vectors through it.
//!
//! Model files (`EPM1`) are little-endian throughout:
//!
//! ```text
//! "EPM1"
//! u64 n_trials, u64 n_prototypes, u64 prototype_size, u64 n_hypotheses,
//! u64 seed, f64 c_reg, u64 max_iters, f64 tol, u64 source_dims
//! per trial: f64[n_prototypes * source_dims] weights, f64[n_prototypes] biases
//! ```

use std::fs;
use std::path::Path;

use crate::dataset::{Dataset, FeatureMatrix};
use crate::error::{Error, Result};
use crate::linear::{self, LogRegModel, TrainOptions};
use crate::par;
use crate::sampling::{sample_trial, EpParams};

pub const EPM_MAGIC: &[u8; 4] = b"EPM1";

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleModel {
    projections: Vec<LogRegModel>,
    params: EpParams,
    source_dims: usize,
}

impl EnsembleModel {
    pub fn new(
        projections: Vec<LogRegModel>,
        params: EpParams,
        source_dims: usize,
    ) -> Result<Self> {
        if projections.len() != params.n_trials {
            return Err(Error::InvalidParams(format!(
                "{} projections for {} trials",
                projections.len(),
                params.n_trials
            )));
        }
        if let Some(p) = projections
            .iter()
            .find(|p| p.n_classes() != params.n_prototypes || p.n_dims() != source_dims)
        {
            return Err(Error::InvalidParams(format!(
                "projection shape {}x{} does not match {}x{source_dims}",
                p.n_classes(),
                p.n_dims(),
                params.n_prototypes
            )));
        }
        Ok(Self {
            projections,
            params,
            source_dims,
        })
    }

    pub fn projections(&self) -> &[LogRegModel] {
        &self.projections
    }

    pub fn params(&self) -> &EpParams {
        &self.params
    }

    pub fn source_dims(&self) -> usize {
        self.source_dims
    }

    pub fn output_dims(&self) -> usize {
        self.params.output_dims()
    }

    fn project_into(&self, x: &[f64], out: &mut [f64]) {
        let r = self.params.n_prototypes;
        for (phi, block) in self.projections.iter().zip(out.chunks_exact_mut(r)) {
            phi.proba_into(x, block);
        }
    }
}

/// Fits one projection per trial. Only the features are read; trials run
/// on independent streams, so the result does not depend on scheduling.
pub fn fit(features: &FeatureMatrix, params: &EpParams) -> Result<EnsembleModel> {
    params.validate_for(features.n_samples())?;
    let projections = par::try_map_indexed(params.n_trials, |t| fit_trial(features, params, t))?;
    EnsembleModel::new(projections, *params, features.n_dims())
}

/// [`fit`] on a dataset's features. Labels, if any, are ignored.
pub fn fit_dataset(d: &Dataset, params: &EpParams) -> Result<EnsembleModel> {
    fit(&d.features, params)
}

fn fit_trial(features: &FeatureMatrix, params: &EpParams, t: usize) -> Result<LogRegModel> {
    let set = sample_trial(features, params, t)?;
    let x = features.select_rows(&set.sample_indices())?;
    linear::train(
        &x,
        &set.pseudo_labels(),
        params.n_prototypes,
        &params.base_learner,
    )
}

/// Concatenated class probabilities of every projection, in trial order.
pub fn project(model: &EnsembleModel, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != model.source_dims {
        return Err(Error::DimensionMismatch {
            expected: model.source_dims,
            actual: x.len(),
        });
    }
    let mut out = vec![0.0; model.output_dims()];
    model.project_into(x, &mut out);
    Ok(out)
}

pub fn project_all(model: &EnsembleModel, m: &FeatureMatrix) -> Result<FeatureMatrix> {
    if m.n_dims() != model.source_dims {
        return Err(Error::DimensionMismatch {
            expected: model.source_dims,
            actual: m.n_dims(),
        });
    }
    let width = model.output_dims();
    let rows = par::map_indexed(m.n_samples(), |i| {
        let mut out = vec![0.0; width];
        model.project_into(m.row(i), &mut out);
        out
    });
    FeatureMatrix::new(m.n_samples(), width, rows.concat())
}

pub fn encode_model(model: &EnsembleModel) -> Vec<u8> {
    let p = &model.params;
    let mut out = Vec::new();
    out.extend_from_slice(EPM_MAGIC);
    for v in [p.n_trials, p.n_prototypes, p.prototype_size, p.n_hypotheses] {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    out.extend_from_slice(&p.seed.to_le_bytes());
    out.extend_from_slice(&p.base_learner.c_reg.to_le_bytes());
    out.extend_from_slice(&(p.base_learner.max_iters as u64).to_le_bytes());
    out.extend_from_slice(&p.base_learner.tol.to_le_bytes());
    out.extend_from_slice(&(model.source_dims as u64).to_le_bytes());
    for phi in &model.projections {
        for v in phi.weights().iter().chain(phi.biases()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
}

impl Reader<'_> {
    fn take8(&mut self) -> Result<[u8; 8]> {
        if self.bytes.len() < 8 {
            return Err(Error::Format("model file truncated".into()));
        }
        let (head, rest) = self.bytes.split_at(8);
        self.bytes = rest;
        Ok(head.try_into().unwrap())
    }

    fn u64(&mut self) -> Result<u64> {
        self.take8().map(u64::from_le_bytes)
    }

    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Format("count overflows usize".into()))
    }

    fn f64(&mut self) -> Result<f64> {
        self.take8().map(f64::from_le_bytes)
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        if self.bytes.len() / 8 < n {
            return Err(Error::Format("model file truncated".into()));
        }
        (0..n).map(|_| self.f64()).collect()
    }
}

pub fn decode_model(bytes: &[u8]) -> Result<EnsembleModel> {
    if bytes.len() < 4 || &bytes[..4] != EPM_MAGIC {
        return Err(Error::Format("missing EPM1 header".into()));
    }
    let mut rd = Reader { bytes: &bytes[4..] };
    let n_trials = rd.usize()?;
    let n_prototypes = rd.usize()?;
    let prototype_size = rd.usize()?;
    let n_hypotheses = rd.usize()?;
    let seed = rd.u64()?;
    let base_learner = TrainOptions {
        c_reg: rd.f64()?,
        max_iters: rd.usize()?,
        tol: rd.f64()?,
    };
    let source_dims = rd.usize()?;
    let params = EpParams {
        n_trials,
        n_prototypes,
        prototype_size,
        n_hypotheses,
        seed,
        base_learner,
    };
    let mut projections = Vec::with_capacity(n_trials.min(1 << 16));
    for _ in 0..n_trials {
        let weights = rd.f64s(n_prototypes.saturating_mul(source_dims))?;
        let biases = rd.f64s(n_prototypes)?;
        let phi = LogRegModel::new(weights, biases, source_dims)
            .map_err(|e| Error::Format(format!("bad projection: {e}")))?;
        projections.push(phi);
    }
    if !rd.bytes.is_empty() {
        return Err(Error::Format(format!("{} trailing bytes", rd.bytes.len())));
    }
    EnsembleModel::new(projections, params, source_dims).map_err(|e| Error::Format(e.to_string()))
}

pub fn save_model(model: &EnsembleModel, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_model(model))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<EnsembleModel> {
    decode_model(&fs::read(path)?)
}
