//! Evaluation metrics: top-1, class-wise recall, many/medium/few subgroups and
//! grouped confusion.

use serde::{Deserialize, Serialize};

use crate::confusion::{confusion_histogram, confusion_matrix, ConfusionMatrix};
use crate::data::LabeledDataset;
use crate::error::{check_len, Error, Result};
use crate::nn::MlpClassifier;
use crate::scalar::Scalar;

/// Training-count thresholds: `many` if `n > many`, `few` if `n < few`, else `medium`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgroupThresholds {
    pub many: usize,
    pub few: usize,
}

impl Default for SubgroupThresholds {
    fn default() -> Self {
        Self { many: 100, few: 20 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subgroup {
    Many,
    Medium,
    Few,
}

impl SubgroupThresholds {
    pub fn classify(&self, train_count: usize) -> Subgroup {
        if train_count > self.many {
            Subgroup::Many
        } else if train_count < self.few {
            Subgroup::Few
        } else {
            Subgroup::Medium
        }
    }
}

/// Mean class recall within each subgroup; `None` when a subgroup has no
/// evaluated class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubgroupAccuracy {
    pub many: Option<f64>,
    pub medium: Option<f64>,
    pub few: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub top1: f64,
    /// Recall per class; `None` for classes absent from the evaluation set.
    pub per_class_acc: Vec<Option<f64>>,
    pub subgroups: Vec<Subgroup>,
    pub subgroup_acc: SubgroupAccuracy,
    pub confusion: ConfusionMatrix,
    pub confusion_hist: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grouped_confusion: Option<Vec<Vec<u64>>>,
}

/// Builds the full report from a confusion matrix of evaluation predictions.
pub fn report_from_confusion(
    confusion: ConfusionMatrix,
    train_counts: &[usize],
    thresholds: SubgroupThresholds,
    group_size: Option<usize>,
) -> Result<MetricsReport> {
    check_len("train counts", confusion.num_classes(), train_counts.len())?;
    if thresholds.few > thresholds.many {
        return Err(Error::InvalidParameter {
            name: "thresholds",
            reason: format!("few ({}) exceeds many ({})", thresholds.few, thresholds.many),
        });
    }
    let total = confusion.total();
    let top1 = if total == 0 {
        0.0
    } else {
        confusion.correct() as f64 / total as f64
    };
    let per_class_acc = confusion.recalls();
    let subgroups: Vec<Subgroup> = train_counts.iter().map(|&n| thresholds.classify(n)).collect();
    let mean_of = |g: Subgroup| -> Option<f64> {
        let vals: Vec<f64> = subgroups
            .iter()
            .zip(&per_class_acc)
            .filter(|(s, _)| **s == g)
            .filter_map(|(_, a)| *a)
            .collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    };
    let subgroup_acc = SubgroupAccuracy {
        many: mean_of(Subgroup::Many),
        medium: mean_of(Subgroup::Medium),
        few: mean_of(Subgroup::Few),
    };
    let grouped_confusion = match group_size {
        Some(g) => Some(group_confusion(&confusion, g)?),
        None => None,
    };
    Ok(MetricsReport {
        top1,
        per_class_acc,
        subgroups,
        subgroup_acc,
        confusion_hist: confusion_histogram(&confusion),
        confusion,
        grouped_confusion,
    })
}

/// Evaluates `model` on `test`; subgroup membership uses the training counts.
pub fn evaluate<T: Scalar>(
    model: &MlpClassifier<T>,
    test: &LabeledDataset<T>,
    train_counts: &[usize],
    thresholds: SubgroupThresholds,
    group_size: Option<usize>,
) -> Result<MetricsReport> {
    report_from_confusion(confusion_matrix(model, test)?, train_counts, thresholds, group_size)
}

/// Block sums over consecutive classes; a trailing partial group is kept.
pub fn group_confusion(matrix: &ConfusionMatrix, group_size: usize) -> Result<Vec<Vec<u64>>> {
    if group_size == 0 {
        return Err(Error::InvalidParameter {
            name: "group_size",
            reason: "must be positive".into(),
        });
    }
    let n = matrix.num_classes();
    let groups = n.div_ceil(group_size);
    let mut out = vec![vec![0u64; groups]; groups];
    for i in 0..n {
        for j in 0..n {
            out[i / group_size][j / group_size] += matrix.get(i, j);
        }
    }
    Ok(out)
}
