use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::grad::Gradients;
use super::mlp::{Layer, MlpClassifier};
use crate::error::{check_len, Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerKind {
    SgdMomentum { momentum: f64 },
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl OptimizerKind {
    pub fn adam() -> Self {
        Self::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Optimizer state. Weight decay enters as an L2 term added to the gradient.
#[derive(Debug, Clone)]
pub struct OptimizerState<T> {
    kind: OptimizerKind,
    learning_rate: f64,
    weight_decay: f64,
    /// Momentum buffer (SGD) or first moment (Adam).
    first: Vec<Layer<T>>,
    /// Second moment; empty for SGD.
    second: Vec<Layer<T>>,
    steps: u64,
}

impl<T: Scalar> OptimizerState<T> {
    pub fn new(kind: OptimizerKind, learning_rate: f64, weight_decay: f64, model: &MlpClassifier<T>) -> Result<Self> {
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "learning_rate",
                reason: format!("{learning_rate} is not a positive finite number"),
            });
        }
        if weight_decay.is_nan() || weight_decay < 0.0 {
            return Err(Error::InvalidParameter {
                name: "weight_decay",
                reason: format!("{weight_decay} is negative"),
            });
        }
        let zeros = || -> Vec<Layer<T>> {
            model
                .layers()
                .iter()
                .map(|l| Layer::zeros(l.fan_in(), l.fan_out()))
                .collect()
        };
        let second = match kind {
            OptimizerKind::SgdMomentum { .. } => Vec::new(),
            OptimizerKind::Adam { .. } => zeros(),
        };
        Ok(Self {
            kind,
            learning_rate,
            weight_decay,
            first: zeros(),
            second,
            steps: 0,
        })
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn set_learning_rate(&mut self, lr: f64) {
        self.learning_rate = lr;
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn step(&mut self, model: &mut MlpClassifier<T>, grads: &Gradients<T>) -> Result<()> {
        let n = model.layers().len();
        self.step_layers(model, grads, 0..n)
    }

    /// Updates only the layers in `layers`; the rest keep their values and buffers.
    pub fn step_layers(
        &mut self,
        model: &mut MlpClassifier<T>,
        grads: &Gradients<T>,
        layers: Range<usize>,
    ) -> Result<()> {
        check_len("gradient layers", model.layers().len(), grads.layers.len())?;
        check_len("optimizer buffers", model.layers().len(), self.first.len())?;
        for (l, g) in grads.layers.iter().enumerate() {
            check_len("gradient layer", model.layers()[l].num_params(), g.num_params())?;
        }
        self.steps += 1;
        let lr = T::lit(self.learning_rate);
        let wd = T::lit(self.weight_decay);
        for l in layers {
            let param = &mut model.layers_mut()[l];
            let grad = &grads.layers[l];
            match self.kind {
                OptimizerKind::SgdMomentum { momentum } => {
                    let mu = T::lit(momentum);
                    let buf = &mut self.first[l];
                    sgd_update(
                        param.weights.as_mut_slice(),
                        grad.weights.as_slice(),
                        buf.weights.as_mut_slice(),
                        lr,
                        wd,
                        mu,
                    );
                    sgd_update(&mut param.bias, &grad.bias, &mut buf.bias, lr, wd, mu);
                }
                OptimizerKind::Adam { beta1, beta2, eps } => {
                    let h = AdamHyper {
                        lr,
                        wd,
                        beta1: T::lit(beta1),
                        beta2: T::lit(beta2),
                        eps: T::lit(eps),
                        correction1: T::lit(1.0 - beta1.powi(self.steps as i32)),
                        correction2: T::lit(1.0 - beta2.powi(self.steps as i32)),
                    };
                    let (m, v) = (&mut self.first[l], &mut self.second[l]);
                    adam_update(
                        param.weights.as_mut_slice(),
                        grad.weights.as_slice(),
                        m.weights.as_mut_slice(),
                        v.weights.as_mut_slice(),
                        &h,
                    );
                    adam_update(&mut param.bias, &grad.bias, &mut m.bias, &mut v.bias, &h);
                }
            }
        }
        Ok(())
    }
}

fn sgd_update<T: Scalar>(p: &mut [T], g: &[T], buf: &mut [T], lr: T, wd: T, mu: T) {
    for ((p, &g), b) in p.iter_mut().zip(g).zip(buf) {
        let g = g + wd * *p;
        *b = mu * *b + g;
        *p -= lr * *b;
    }
}

struct AdamHyper<T> {
    lr: T,
    wd: T,
    beta1: T,
    beta2: T,
    eps: T,
    correction1: T,
    correction2: T,
}

fn adam_update<T: Scalar>(p: &mut [T], g: &[T], m: &mut [T], v: &mut [T], h: &AdamHyper<T>) {
    for (((p, &g), m), v) in p.iter_mut().zip(g).zip(m).zip(v) {
        let g = g + h.wd * *p;
        *m = h.beta1 * *m + (T::one() - h.beta1) * g;
        *v = h.beta2 * *v + (T::one() - h.beta2) * g * g;
        let m_hat = *m / h.correction1;
        let v_hat = *v / h.correction2;
        *p -= h.lr * m_hat / (v_hat.sqrt() + h.eps);
    }
}
