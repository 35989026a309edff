//! Confusion-pair mixup for long-tailed classification.
//!
//! The crate trains small rectified MLPs on long-tailed data and regularizes
//! them with mixup between the class pairs the model itself confuses. The
//! pieces are:
//!
//! - [`nn`]: the classifier, cross-entropy and balanced-softmax losses with
//!   hand-derived gradients, SGD-momentum and Adam.
//! - [`data`]: labeled datasets, the four-Gaussian toy, the ring-of-blobs
//!   benchmark, exponential long-tail subsampling, balanced resampling, CSV.
//! - [`mixing`]: Beta sampling, input/label interpolation and the
//!   count-aware label weight.
//! - [`confusion`]: confusion matrices, the misclassification bag and the
//!   pair sampler.
//! - [`train`]: ERM, mixup, the two-stage regimen and balanced fine-tuning.
//! - [`report`] and [`experiment`]: metrics, config files, runs and sweeps.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix the double-precision types used by experiments and the CLI.

pub mod confusion;
pub mod data;
pub mod error;
pub mod experiment;
pub mod mixing;
pub mod model_io;
pub mod nn;
pub mod report;
pub mod rng;
mod scalar;
pub mod train;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Mlp = nn::MlpClassifier<f64>;
pub type Mlp32 = nn::MlpClassifier<f32>;
pub type Dataset = data::LabeledDataset<f64>;
pub type Dataset32 = data::LabeledDataset<f32>;
pub type Label = nn::SoftLabel<f64>;
pub type Optimizer = nn::OptimizerState<f64>;
