//! Dense classifier substrate: the rectified MLP, its losses, hand-derived
//! gradients and the two optimizers.

mod grad;
mod label;
mod loss;
mod matrix;
mod mlp;
mod optim;

pub use grad::{accumulate_gradients, backward, batch_loss, BatchPass, Gradients};
pub use label::SoftLabel;
pub use loss::{
    balanced_softmax_loss, balanced_softmax_soft, cross_entropy_loss, log_softmax, softmax, Loss, LossValue,
};
pub use matrix::Matrix;
pub use mlp::{argmax, Layer, MlpClassifier, Trace};
pub use optim::{OptimizerKind, OptimizerState};
