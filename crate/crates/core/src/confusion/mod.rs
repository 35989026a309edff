//! Confusion bookkeeping: the prediction tally, the accumulated bag of
//! misclassified class pairs, and the pair sampler built on it.

mod bag;
mod matrix;

pub use bag::{build_cp_batch, ConfusionPairBag, CpPair, PairSampling};
pub use matrix::{confusion_histogram, confusion_matrix, ConfusionMatrix};
