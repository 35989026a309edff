//! Interpolation of inputs and labels.
//!
//! Inputs are mixed with a Beta-distributed weight; labels are mixed with a
//! weight that blends the same draw with the count ratio of the two classes,
//! shifting label mass toward the rarer class.

mod beta;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use beta::{gamma_variate, ln_gamma_variate, sample_lambda};

use crate::error::{check_len, Error, Result};
use crate::nn::SoftLabel;
use crate::scalar::Scalar;

/// Mixing and regularization hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixConfig {
    /// Parameter of the symmetric Beta distribution.
    pub alpha: f64,
    /// Weight of the random draw in the label weight; `1 - t` goes to the count ratio.
    pub t: f64,
    pub gamma_cp: f64,
    pub gamma_mix: f64,
}

impl Default for MixConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            t: 0.5,
            gamma_cp: 1.0,
            gamma_mix: 1.0,
        }
    }
}

impl MixConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: &str| {
            Err(Error::InvalidParameter {
                name,
                reason: reason.to_string(),
            })
        };
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("alpha", "must be positive");
        }
        if !(0.0..=1.0).contains(&self.t) {
            return bad("t", "must lie in [0, 1]");
        }
        if !(self.gamma_cp >= 0.0 && self.gamma_cp.is_finite()) {
            return bad("gamma_cp", "must be nonnegative");
        }
        if !(self.gamma_mix >= 0.0 && self.gamma_mix.is_finite()) {
            return bad("gamma_mix", "must be nonnegative");
        }
        Ok(())
    }
}

/// One synthesized training example.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedExample<T> {
    pub x_mix: Vec<T>,
    pub y_mix: SoftLabel<T>,
    /// Input mixing weight on the first sample.
    pub lambda: f64,
    /// Classes of the first and second sample.
    pub classes: (usize, usize),
}

fn check_unit(name: &'static str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("{v} is outside [0, 1]"),
        })
    }
}

/// `lambda * x1 + (1 - lambda) * x2`, clamped into the segment between the two.
pub fn mix_inputs<T: Scalar>(x1: &[T], x2: &[T], lambda: f64) -> Result<Vec<T>> {
    check_len("mixed inputs", x1.len(), x2.len())?;
    check_unit("lambda", lambda)?;
    let l = T::lit(lambda);
    let r = T::lit(1.0 - lambda);
    Ok(x1
        .iter()
        .zip(x2)
        .map(|(&a, &b)| {
            let v = l * a + r * b;
            // rounding can push v an ulp past the segment
            v.max(a.min(b)).min(a.max(b))
        })
        .collect())
}

/// Label weight on the first class: `t * lambda + (1 - t) * n2 / (n1 + n2)`.
pub fn label_lambda(lambda: f64, t: f64, n_y1: usize, n_y2: usize) -> Result<f64> {
    if n_y1 == 0 || n_y2 == 0 {
        return Err(Error::InvalidCounts(format!(
            "label mixing needs positive class counts, got ({n_y1}, {n_y2})"
        )));
    }
    check_unit("lambda", lambda)?;
    check_unit("t", t)?;
    let ratio = n_y2 as f64 / (n_y1 + n_y2) as f64;
    Ok((t * lambda + (1.0 - t) * ratio).clamp(0.0, 1.0))
}

/// `lambda_y * e_{y1} + (1 - lambda_y) * e_{y2}`.
pub fn mix_labels<T: Scalar>(y1: usize, y2: usize, lambda_y: f64, num_classes: usize) -> Result<SoftLabel<T>> {
    check_unit("lambda_y", lambda_y)?;
    SoftLabel::pair(y1, y2, T::lit(lambda_y), num_classes)
}

/// Mixes a pair with an explicit input weight `lambda`; the label weight is
/// derived from the same `lambda` through [`label_lambda`].
pub fn cp_mix_with_lambda<T: Scalar>(
    (x1, y1): (&[T], usize),
    (x2, y2): (&[T], usize),
    class_counts: &[usize],
    t: f64,
    lambda: f64,
) -> Result<MixedExample<T>> {
    let num_classes = class_counts.len();
    for class in [y1, y2] {
        if class >= num_classes {
            return Err(Error::ClassOutOfRange { class, num_classes });
        }
    }
    let x_mix = mix_inputs(x1, x2, lambda)?;
    let lambda_y = label_lambda(lambda, t, class_counts[y1], class_counts[y2])?;
    Ok(MixedExample {
        x_mix,
        y_mix: mix_labels(y1, y2, lambda_y, num_classes)?,
        lambda,
        classes: (y1, y2),
    })
}

/// Draws one `lambda ~ Beta(alpha, alpha)` and mixes the pair with it.
pub fn cp_mix_pair<T: Scalar, R: Rng + ?Sized>(
    first: (&[T], usize),
    second: (&[T], usize),
    class_counts: &[usize],
    config: &MixConfig,
    rng: &mut R,
) -> Result<MixedExample<T>> {
    let lambda = sample_lambda(config.alpha, rng)?;
    cp_mix_with_lambda(first, second, class_counts, config.t, lambda)
}

/// Vanilla mixup of a pair: labels share the input weight.
pub fn vanilla_mix_pair<T: Scalar, R: Rng + ?Sized>(
    (x1, y1): (&[T], usize),
    (x2, y2): (&[T], usize),
    num_classes: usize,
    alpha: f64,
    rng: &mut R,
) -> Result<MixedExample<T>> {
    let lambda = sample_lambda(alpha, rng)?;
    Ok(MixedExample {
        x_mix: mix_inputs(x1, x2, lambda)?,
        y_mix: mix_labels(y1, y2, lambda, num_classes)?,
        lambda,
        classes: (y1, y2),
    })
}

/// Pairs every sample of a batch with the sample at a random permutation of
/// the batch; returns `(i, perm[i])` pairs in batch order.
pub fn permutation_pairs<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<(usize, usize)> {
    let mut perm: Vec<usize> = (0..len).collect();
    perm.shuffle(rng);
    perm.into_iter().enumerate().collect()
}
