use super::label::SoftLabel;
use super::loss::Loss;
use super::mlp::{argmax, Layer, MlpClassifier};
use crate::error::{check_len, Error, Result};
use crate::scalar::Scalar;

/// Parameter-shaped gradient buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub layers: Vec<Layer<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn zeros_like(model: &MlpClassifier<T>) -> Self {
        Self {
            layers: model
                .layers()
                .iter()
                .map(|l| Layer::zeros(l.fan_in(), l.fan_out()))
                .collect(),
        }
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &Self, scale: T) -> Result<()> {
        check_len("gradient layers", self.layers.len(), other.layers.len())?;
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            check_len("gradient layer", a.num_params(), b.num_params())?;
            for (x, &y) in a.weights.as_mut_slice().iter_mut().zip(b.weights.as_slice()) {
                *x += scale * y;
            }
            for (x, &y) in a.bias.iter_mut().zip(&b.bias) {
                *x += scale * y;
            }
        }
        Ok(())
    }

    pub fn flat(&self) -> Vec<T> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.as_slice().iter().chain(&l.bias).copied())
            .collect()
    }
}

/// Loss and predictions of one mini-batch pass.
#[derive(Debug, Clone)]
pub struct BatchPass<T> {
    pub mean_loss: T,
    /// Predicted class of every sample, taken from the same forward pass.
    pub predictions: Vec<usize>,
}

/// Adds `weight * d(mean loss)/d(theta)` of the batch into `grads`.
pub fn accumulate_gradients<T: Scalar, X: AsRef<[T]>>(
    model: &MlpClassifier<T>,
    inputs: &[X],
    targets: &[SoftLabel<T>],
    loss: &Loss<T>,
    weight: T,
    grads: &mut Gradients<T>,
) -> Result<BatchPass<T>> {
    check_len("batch targets", inputs.len(), targets.len())?;
    if inputs.is_empty() {
        return Err(Error::InvalidParameter {
            name: "batch",
            reason: "batch is empty".into(),
        });
    }
    check_len("gradient layers", model.layers().len(), grads.layers.len())?;
    let n = T::lit(inputs.len() as f64);
    let scale = weight / n;
    let mut total = T::zero();
    let mut predictions = Vec::with_capacity(inputs.len());
    for (x, y) in inputs.iter().zip(targets) {
        let trace = model.forward_trace(x.as_ref())?;
        let lv = loss.evaluate(trace.logits(), y)?;
        total += lv.value;
        predictions.push(argmax(trace.logits()));
        let delta: Vec<T> = lv.grad.iter().map(|&g| g * scale).collect();
        backprop(model, &trace.activations, &trace.pre_activations, delta, grads);
    }
    Ok(BatchPass {
        mean_loss: total / n,
        predictions,
    })
}

fn backprop<T: Scalar>(
    model: &MlpClassifier<T>,
    activations: &[Vec<T>],
    pre_activations: &[Vec<T>],
    mut delta: Vec<T>,
    grads: &mut Gradients<T>,
) {
    for l in (0..model.layers().len()).rev() {
        let layer = &model.layers()[l];
        let input = &activations[l];
        let g = &mut grads.layers[l];
        for (o, &d) in delta.iter().enumerate() {
            if d == T::zero() {
                continue;
            }
            for (gw, &a) in g.weights.row_mut(o).iter_mut().zip(input) {
                *gw += d * a;
            }
            g.bias[o] += d;
        }
        if l == 0 {
            break;
        }
        let below = &pre_activations[l - 1];
        let mut next = vec![T::zero(); layer.fan_in()];
        for (o, &d) in delta.iter().enumerate() {
            if d == T::zero() {
                continue;
            }
            for (nx, &w) in next.iter_mut().zip(layer.weights.row(o)) {
                *nx += w * d;
            }
        }
        for (nx, &z) in next.iter_mut().zip(below) {
            if z <= T::zero() {
                *nx = T::zero();
            }
        }
        delta = next;
    }
}

/// Gradients of the batch-mean loss with respect to every parameter.
pub fn backward<T: Scalar, X: AsRef<[T]>>(
    model: &MlpClassifier<T>,
    inputs: &[X],
    targets: &[SoftLabel<T>],
    loss: &Loss<T>,
) -> Result<(T, Gradients<T>)> {
    let mut grads = Gradients::zeros_like(model);
    let pass = accumulate_gradients(model, inputs, targets, loss, T::one(), &mut grads)?;
    Ok((pass.mean_loss, grads))
}

/// Batch-mean loss without gradients.
pub fn batch_loss<T: Scalar, X: AsRef<[T]>>(
    model: &MlpClassifier<T>,
    inputs: &[X],
    targets: &[SoftLabel<T>],
    loss: &Loss<T>,
) -> Result<T> {
    check_len("batch targets", inputs.len(), targets.len())?;
    let mut total = T::zero();
    for (x, y) in inputs.iter().zip(targets) {
        total += loss.evaluate(&model.forward(x.as_ref())?, y)?.value;
    }
    Ok(total / T::lit(inputs.len() as f64))
}
