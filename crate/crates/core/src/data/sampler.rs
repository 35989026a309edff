use rand::Rng;

use super::{ClassIndex, LabeledDataset};
use crate::error::Result;
use crate::rng::RunRng;
use crate::scalar::Scalar;

/// Endless stream of row indices: a class uniformly at random, then a row of
/// that class uniformly at random (with replacement).
#[derive(Debug, Clone)]
pub struct BalancedSampler {
    index: ClassIndex,
    rng: RunRng,
}

impl BalancedSampler {
    pub fn new<T: Scalar>(data: &LabeledDataset<T>, rng: RunRng) -> Result<Self> {
        let index = data.class_index();
        index.ensure_nonempty()?;
        Ok(Self { index, rng })
    }
}

impl Iterator for BalancedSampler {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        let c = self.rng.random_range(0..self.index.num_classes());
        let rows = self.index.rows(c);
        Some(rows[self.rng.random_range(0..rows.len())])
    }
}
