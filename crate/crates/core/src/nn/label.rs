use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Probability vector over classes used as a training target.
///
/// Hard labels are one-hot; mixed labels carry weight on two classes.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftLabel<T> {
    probs: Vec<T>,
}

impl<T: Scalar> SoftLabel<T> {
    pub fn new(probs: Vec<T>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidParameter {
                name: "probs",
                reason: "soft label needs at least one class".into(),
            });
        }
        if probs.iter().any(|p| !p.is_finite() || *p < T::zero() || *p > T::one()) {
            return Err(Error::InvalidParameter {
                name: "probs",
                reason: "entries must lie in [0, 1]".into(),
            });
        }
        let sum: f64 = probs.iter().map(|p| p.as_f64()).sum();
        let tol = if std::mem::size_of::<T>() < 8 { 1e-5 } else { 1e-9 };
        if (sum - 1.0).abs() > tol {
            return Err(Error::InvalidParameter {
                name: "probs",
                reason: format!("entries sum to {sum}, not 1"),
            });
        }
        Ok(Self { probs })
    }

    pub fn one_hot(class: usize, num_classes: usize) -> Result<Self> {
        if class >= num_classes {
            return Err(Error::ClassOutOfRange { class, num_classes });
        }
        let mut probs = vec![T::zero(); num_classes];
        probs[class] = T::one();
        Ok(Self { probs })
    }

    /// `weight * e_a + (1 - weight) * e_b`.
    pub fn pair(a: usize, b: usize, weight: T, num_classes: usize) -> Result<Self> {
        for class in [a, b] {
            if class >= num_classes {
                return Err(Error::ClassOutOfRange { class, num_classes });
            }
        }
        if !(weight >= T::zero() && weight <= T::one()) {
            return Err(Error::InvalidParameter {
                name: "lambda_y",
                reason: format!("{weight} is outside [0, 1]"),
            });
        }
        let mut probs = vec![T::zero(); num_classes];
        probs[a] += weight;
        probs[b] += T::one() - weight;
        Ok(Self { probs })
    }

    pub fn num_classes(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    /// The class carrying all the mass, if this label is one-hot.
    pub fn hard_class(&self) -> Option<usize> {
        let mut found = None;
        for (i, &p) in self.probs.iter().enumerate() {
            if p == T::one() {
                found = Some(i);
            } else if p != T::zero() {
                return None;
            }
        }
        found
    }
}
