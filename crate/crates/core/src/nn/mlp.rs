use rand::Rng;

use super::matrix::Matrix;
use crate::error::{check_len, Error, Result};
use crate::scalar::Scalar;

/// One affine map `z = W a + b`; `weights` has shape `(out, in)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    pub weights: Matrix<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Layer<T> {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            weights: Matrix::zeros(fan_out, fan_in),
            bias: vec![T::zero(); fan_out],
        }
    }

    pub fn fan_in(&self) -> usize {
        self.weights.cols()
    }

    pub fn fan_out(&self) -> usize {
        self.weights.rows()
    }

    pub fn num_params(&self) -> usize {
        self.weights.as_slice().len() + self.bias.len()
    }

    fn values(&self) -> impl Iterator<Item = &T> {
        self.weights.as_slice().iter().chain(self.bias.iter())
    }

    fn values_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.weights.as_mut_slice().iter_mut().chain(self.bias.iter_mut())
    }
}

/// Feed-forward classifier: rectified hidden layers, identity output layer.
///
/// `layer_dims = [input, hidden..., classes]`. Parameters are laid out layer by
/// layer, weights (row-major, `out x in`) before biases; `params_flat` and the
/// model file format both use this order.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpClassifier<T> {
    layer_dims: Vec<usize>,
    layers: Vec<Layer<T>>,
}

/// Pre-activations and activations of a single forward pass.
#[derive(Debug, Clone)]
pub struct Trace<T> {
    /// `activations[0]` is the input; `activations[l + 1]` is the output of layer `l`.
    pub activations: Vec<Vec<T>>,
    pub pre_activations: Vec<Vec<T>>,
}

impl<T> Trace<T> {
    pub fn logits(&self) -> &[T] {
        self.activations.last().expect("trace has at least the input")
    }
}

fn validate_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 {
        return Err(Error::InvalidParameter {
            name: "layer_dims",
            reason: format!("need at least input and output dims, got {dims:?}"),
        });
    }
    if dims.contains(&0) {
        return Err(Error::InvalidParameter {
            name: "layer_dims",
            reason: format!("all dims must be positive, got {dims:?}"),
        });
    }
    Ok(())
}

impl<T: Scalar> MlpClassifier<T> {
    pub fn zeros(layer_dims: &[usize]) -> Result<Self> {
        validate_dims(layer_dims)?;
        let layers = layer_dims.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect();
        Ok(Self {
            layer_dims: layer_dims.to_vec(),
            layers,
        })
    }

    /// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn glorot<R: Rng + ?Sized>(layer_dims: &[usize], rng: &mut R) -> Result<Self> {
        let mut model = Self::zeros(layer_dims)?;
        for layer in &mut model.layers {
            let bound = (6.0 / (layer.fan_in() + layer.fan_out()) as f64).sqrt();
            for w in layer.weights.as_mut_slice() {
                *w = T::lit(rng.random_range(-bound..=bound));
            }
        }
        Ok(model)
    }

    pub fn from_layers(layers: Vec<Layer<T>>) -> Result<Self> {
        let first = layers.first().ok_or(Error::InvalidParameter {
            name: "layers",
            reason: "model needs at least one layer".into(),
        })?;
        let mut dims = vec![first.fan_in()];
        for layer in &layers {
            check_len("layer input", *dims.last().unwrap(), layer.fan_in())?;
            check_len("layer bias", layer.fan_out(), layer.bias.len())?;
            dims.push(layer.fan_out());
        }
        validate_dims(&dims)?;
        Ok(Self {
            layer_dims: dims,
            layers,
        })
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn num_classes(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<T>] {
        &mut self.layers
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(Layer::num_params).sum()
    }

    pub fn params_flat(&self) -> Vec<T> {
        self.layers.iter().flat_map(|l| l.values().copied()).collect()
    }

    pub fn set_params_flat(&mut self, params: &[T]) -> Result<()> {
        check_len("flat parameters", self.num_params(), params.len())?;
        let dst = self.layers.iter_mut().flat_map(Layer::values_mut);
        for (d, &s) in dst.zip(params) {
            *d = s;
        }
        Ok(())
    }

    pub fn forward(&self, x: &[T]) -> Result<Vec<T>> {
        check_len("model input", self.input_dim(), x.len())?;
        let mut a = x.to_vec();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = affine(layer, &a);
            if l < last {
                relu_in_place(&mut z);
            }
            a = z;
        }
        Ok(a)
    }

    pub fn forward_trace(&self, x: &[T]) -> Result<Trace<T>> {
        check_len("model input", self.input_dim(), x.len())?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        activations.push(x.to_vec());
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let z = affine(layer, activations.last().unwrap());
            let mut a = z.clone();
            if l < last {
                relu_in_place(&mut a);
            }
            pre_activations.push(z);
            activations.push(a);
        }
        Ok(Trace {
            activations,
            pre_activations,
        })
    }

    pub fn predict(&self, x: &[T]) -> Result<usize> {
        Ok(argmax(&self.forward(x)?))
    }
}

fn affine<T: Scalar>(layer: &Layer<T>, a: &[T]) -> Vec<T> {
    (0..layer.fan_out())
        .map(|o| {
            layer
                .weights
                .row(o)
                .iter()
                .zip(a)
                .fold(layer.bias[o], |acc, (&w, &x)| acc + w * x)
        })
        .collect()
}

fn relu_in_place<T: Scalar>(v: &mut [T]) {
    for x in v {
        if *x < T::zero() {
            *x = T::zero();
        }
    }
}

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax<T: Scalar>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
