use super::label::SoftLabel;
use crate::error::{check_len, Error, Result};
use crate::scalar::Scalar;

/// Loss value together with its gradient with respect to the logits.
#[derive(Debug, Clone, PartialEq)]
pub struct LossValue<T> {
    pub value: T,
    pub grad: Vec<T>,
}

/// Per-sample loss applied to model logits.
#[derive(Debug, Clone, PartialEq)]
pub enum Loss<T> {
    CrossEntropy,
    /// Softmax cross-entropy on logits shifted by `log n_c`.
    BalancedSoftmax {
        log_counts: Vec<T>,
    },
}

impl<T: Scalar> Loss<T> {
    pub fn balanced_softmax(class_counts: &[usize]) -> Result<Self> {
        Ok(Self::BalancedSoftmax {
            log_counts: log_counts(class_counts)?,
        })
    }

    pub fn evaluate(&self, logits: &[T], target: &SoftLabel<T>) -> Result<LossValue<T>> {
        match self {
            Loss::CrossEntropy => cross_entropy_loss(logits, target),
            Loss::BalancedSoftmax { log_counts } => {
                check_len("class counts", logits.len(), log_counts.len())?;
                let shifted: Vec<T> = logits.iter().zip(log_counts).map(|(&z, &l)| z + l).collect();
                cross_entropy_loss(&shifted, target)
            }
        }
    }
}

fn log_counts<T: Scalar>(class_counts: &[usize]) -> Result<Vec<T>> {
    if let Some(c) = class_counts.iter().position(|&n| n == 0) {
        return Err(Error::InvalidCounts(format!("class {c} has zero training samples")));
    }
    Ok(class_counts.iter().map(|&n| T::lit((n as f64).ln())).collect())
}

/// Stabilized `log softmax(z)`.
pub fn log_softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let sum: T = logits.iter().map(|&z| (z - max).exp()).sum();
    let lse = max + sum.ln();
    logits.iter().map(|&z| z - lse).collect()
}

pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    log_softmax(logits).into_iter().map(T::exp).collect()
}

/// `-sum_c target_c log softmax(z)_c`, gradient `softmax(z) - target`.
pub fn cross_entropy_loss<T: Scalar>(logits: &[T], target: &SoftLabel<T>) -> Result<LossValue<T>> {
    check_len("soft label", logits.len(), target.num_classes())?;
    if logits.iter().any(|z| !z.is_finite()) {
        return Err(Error::NonFinite("logits"));
    }
    let log_p = log_softmax(logits);
    let mut value = T::zero();
    for (&lp, &t) in log_p.iter().zip(target.probs()) {
        if t != T::zero() {
            value -= t * lp;
        }
    }
    let grad = log_p.iter().zip(target.probs()).map(|(&lp, &t)| lp.exp() - t).collect();
    Ok(LossValue {
        value: value.max(T::zero()),
        grad,
    })
}

/// Balanced softmax on a hard target: `-log(n_y e^{z_y} / sum_c n_c e^{z_c})`.
pub fn balanced_softmax_loss<T: Scalar>(logits: &[T], target: usize, class_counts: &[usize]) -> Result<LossValue<T>> {
    let y = SoftLabel::one_hot(target, logits.len())?;
    balanced_softmax_soft(logits, &y, class_counts)
}

/// Target-weighted sum of per-class shifted log-softmax terms.
pub fn balanced_softmax_soft<T: Scalar>(
    logits: &[T],
    target: &SoftLabel<T>,
    class_counts: &[usize],
) -> Result<LossValue<T>> {
    check_len("class counts", logits.len(), class_counts.len())?;
    Loss::balanced_softmax(class_counts)?.evaluate(logits, target)
}
