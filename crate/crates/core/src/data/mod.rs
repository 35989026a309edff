//! Labeled datasets, synthetic generators, long-tail subsampling and
//! class-balanced resampling.

mod csv_io;
mod imbalance;
mod sampler;
mod synthetic;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use csv_io::{load_csv, save_csv, write_meta};
pub use imbalance::{exponential_imbalance, long_tail_counts};
pub use sampler::BalancedSampler;
pub use synthetic::{make_blobs, make_toy, BlobsSpec, ToySpec};

use crate::error::{check_len, Error, Result};
use crate::nn::Matrix;
use crate::scalar::Scalar;

/// Feature rows with integer class labels in `0..num_classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset<T> {
    name: String,
    features: Matrix<T>,
    labels: Vec<usize>,
    num_classes: usize,
    class_counts: Vec<usize>,
}

impl<T: Scalar> LabeledDataset<T> {
    pub fn new(name: impl Into<String>, features: Matrix<T>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        check_len("labels", features.rows(), labels.len())?;
        let mut class_counts = vec![0; num_classes];
        for &y in &labels {
            if y >= num_classes {
                return Err(Error::ClassOutOfRange { class: y, num_classes });
            }
            class_counts[y] += 1;
        }
        Ok(Self {
            name: name.into(),
            features,
            labels,
            num_classes,
            class_counts,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn features(&self) -> &Matrix<T> {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[T] {
        self.features.row(i)
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Per-class sample counts `n_c`.
    pub fn class_counts(&self) -> &[usize] {
        &self.class_counts
    }

    /// `max n_c / min n_c` over classes; infinite if a class is empty.
    pub fn imbalance_factor(&self) -> f64 {
        let max = self.class_counts.iter().copied().max().unwrap_or(0);
        let min = self.class_counts.iter().copied().min().unwrap_or(0);
        if min == 0 {
            f64::INFINITY
        } else {
            max as f64 / min as f64
        }
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        let labels: Vec<usize> = indices.iter().map(|&i| self.labels[i]).collect();
        let mut class_counts = vec![0; self.num_classes];
        for &y in &labels {
            class_counts[y] += 1;
        }
        Self {
            name: self.name.clone(),
            features: self.features.select_rows(indices),
            labels,
            num_classes: self.num_classes,
            class_counts,
        }
    }

    pub fn class_index(&self) -> ClassIndex {
        ClassIndex::new(self)
    }

    /// Relabels classes so that counts are nonincreasing (stable on ties).
    ///
    /// Returns the new dataset and `old_of_new`, the original id of every new class.
    pub fn sorted_by_frequency(&self) -> (Self, Vec<usize>) {
        let mut old_of_new: Vec<usize> = (0..self.num_classes).collect();
        old_of_new.sort_by(|&a, &b| self.class_counts[b].cmp(&self.class_counts[a]));
        let mut new_of_old = vec![0; self.num_classes];
        for (new, &old) in old_of_new.iter().enumerate() {
            new_of_old[old] = new;
        }
        let labels: Vec<usize> = self.labels.iter().map(|&y| new_of_old[y]).collect();
        let class_counts = old_of_new.iter().map(|&o| self.class_counts[o]).collect();
        let data = Self {
            name: self.name.clone(),
            features: self.features.clone(),
            labels,
            num_classes: self.num_classes,
            class_counts,
        };
        (data, old_of_new)
    }

    pub fn meta(&self) -> DatasetMeta {
        DatasetMeta {
            name: self.name.clone(),
            num_classes: self.num_classes,
            num_samples: self.len(),
            dim: self.dim(),
            class_counts: self.class_counts.clone(),
            imbalance_factor: self.imbalance_factor(),
        }
    }
}

/// Metadata written next to a dataset CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub name: String,
    pub num_classes: usize,
    pub num_samples: usize,
    pub dim: usize,
    pub class_counts: Vec<usize>,
    pub imbalance_factor: f64,
}

/// Row indices of every class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassIndex {
    per_class: Vec<Vec<usize>>,
}

impl ClassIndex {
    pub fn new<T: Scalar>(data: &LabeledDataset<T>) -> Self {
        let mut per_class = vec![Vec::new(); data.num_classes()];
        for (i, &y) in data.labels().iter().enumerate() {
            per_class[y].push(i);
        }
        Self { per_class }
    }

    pub fn num_classes(&self) -> usize {
        self.per_class.len()
    }

    pub fn rows(&self, class: usize) -> &[usize] {
        &self.per_class[class]
    }

    pub fn ensure_nonempty(&self) -> Result<()> {
        match self.per_class.iter().position(Vec::is_empty) {
            Some(c) => Err(Error::EmptyClass(c)),
            None => Ok(()),
        }
    }

    /// Uniform draw, with replacement, from the rows of `class`.
    pub fn sample<R: Rng + ?Sized>(&self, class: usize, rng: &mut R) -> Result<usize> {
        let rows = &self.per_class[class];
        if rows.is_empty() {
            return Err(Error::EmptyClass(class));
        }
        Ok(rows[rng.random_range(0..rows.len())])
    }
}
