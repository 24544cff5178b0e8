//! Ensemble projection: unsupervised feature learning from a plain feature
//! matrix.
//!
//! Each of `T` trials draws a set of `r` far-apart seed samples (best of `m`
//! random hypotheses by average pairwise distance), grows every seed into a
//! compact prototype of its `n` nearest neighbours, and trains an `r`-class
//! softmax regression on the resulting pseudo-labelled set. Projecting a
//! vector through all `T` classifiers and concatenating the class
//! probabilities yields a `T·r` dimensional representation that downstream
//! classifiers and clustering operate on.
//!
//! ```
//! use ensemble_projection::{ensemble, synth::{make_blobs, BlobSpec}, EpParams};
//!
//! let data = make_blobs(&BlobSpec::new(3, 20, 4, 10.0, 1.0, 7)).unwrap();
//! let params = EpParams::new(4, 3, 2, 5, 11);
//! let model = ensemble::fit(&data.features, &params).unwrap();
//! let projected = ensemble::project_all(&model, &data.features).unwrap();
//! assert_eq!(projected.n_dims(), 4 * 3);
//! ```
//!
//! With the default `parallel` feature, trials, experiment runs, k-means
//! restarts and neighbour queries are distributed over the rayon pool.
//! Every parallel unit draws from its own seed derived from the master seed,
//! so results do not depend on the number of threads.

pub mod analysis;
pub mod clustering;
pub mod dataset;
pub mod ensemble;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod linear;
mod par;
pub mod rng;
pub mod sampling;
pub mod synth;

pub use dataset::{Dataset, FeatureMatrix, Format};
pub use ensemble::EnsembleModel;
pub use error::{Error, Result};
pub use linear::{LogRegModel, TrainOptions};
pub use sampling::{EpParams, PrototypeSet};
