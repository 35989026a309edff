use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::LabeledDataset;
use crate::error::{check_len, Error, Result};
use crate::nn::MlpClassifier;
use crate::scalar::Scalar;

/// Prediction tally; rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    num_classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(num_classes: usize) -> Self {
        Self {
            num_classes,
            counts: vec![0; num_classes * num_classes],
        }
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let n = rows.len();
        let mut m = Self::new(n);
        for (i, r) in rows.iter().enumerate() {
            check_len("confusion row", n, r.len())?;
            m.counts[i * n..(i + 1) * n].copy_from_slice(r);
        }
        Ok(m)
    }

    pub fn from_predictions(truths: &[usize], preds: &[usize], num_classes: usize) -> Result<Self> {
        let mut m = Self::new(num_classes);
        m.record(truths, preds)?;
        Ok(m)
    }

    pub fn record(&mut self, truths: &[usize], preds: &[usize]) -> Result<()> {
        check_len("predictions", truths.len(), preds.len())?;
        let n = self.num_classes;
        if let Some(&class) = truths.iter().chain(preds).find(|&&c| c >= n) {
            return Err(Error::ClassOutOfRange { class, num_classes: n });
        }
        for (&t, &p) in truths.iter().zip(preds) {
            self.counts[t * n + p] += 1;
        }
        Ok(())
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Number of class-`truth` samples predicted as `pred`.
    pub fn get(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth * self.num_classes + pred]
    }

    pub fn row(&self, truth: usize) -> &[u64] {
        &self.counts[truth * self.num_classes..(truth + 1) * self.num_classes]
    }

    pub fn row_total(&self, truth: usize) -> u64 {
        self.row(truth).iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.num_classes).map(|c| self.get(c, c)).sum()
    }

    pub fn misclassified(&self) -> u64 {
        self.total() - self.correct()
    }

    /// Recall of every class; `None` for classes without samples.
    pub fn recalls(&self) -> Vec<Option<f64>> {
        (0..self.num_classes)
            .map(|c| {
                let n = self.row_total(c);
                (n > 0).then(|| self.get(c, c) as f64 / n as f64)
            })
            .collect()
    }

    /// One line per true class, comma-separated integers, no header.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for c in 0..self.num_classes {
            let row: Vec<String> = self.row(c).iter().map(u64::to_string).collect();
            let _ = writeln!(s, "{}", row.join(","));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let rows = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(i, l)| {
                l.split(',')
                    .map(|v| {
                        v.trim().parse::<u64>().map_err(|_| Error::Parse {
                            path: "<confusion csv>".into(),
                            line: i as u64 + 1,
                            message: format!("`{v}` is not a count"),
                        })
                    })
                    .collect::<Result<Vec<u64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(&rows)
    }
}

/// Exact tally of the model's predictions over every row of `data`.
pub fn confusion_matrix<T: Scalar>(model: &MlpClassifier<T>, data: &LabeledDataset<T>) -> Result<ConfusionMatrix> {
    check_len("model classes", data.num_classes(), model.num_classes())?;
    let preds = (0..data.len())
        .map(|i| model.predict(data.row(i)))
        .collect::<Result<Vec<_>>>()?;
    ConfusionMatrix::from_predictions(data.labels(), &preds, data.num_classes())
}

/// All off-diagonal entries, largest first.
pub fn confusion_histogram(matrix: &ConfusionMatrix) -> Vec<u64> {
    let n = matrix.num_classes();
    let mut values: Vec<u64> = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| matrix.get(i, j))
        .collect();
    values.sort_unstable_by(|a, b| b.cmp(a));
    values
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_cases() {
        let diag = ConfusionMatrix::from_rows(&[vec![5, 0], vec![0, 9]]).unwrap();
        assert_eq!(confusion_histogram(&diag), vec![0, 0]);
        let m = ConfusionMatrix::from_rows(&[vec![1, 3], vec![7, 2]]).unwrap();
        assert_eq!(confusion_histogram(&m), vec![7, 3]);
        assert_eq!(confusion_histogram(&ConfusionMatrix::new(4)).len(), 12);
    }

    #[test]
    fn csv_round_trip() {
        let m = ConfusionMatrix::from_rows(&[vec![1, 3, 0], vec![7, 2, 1], vec![0, 0, 4]]).unwrap();
        assert_eq!(m.to_csv(), "1,3,0\n7,2,1\n0,0,4\n");
        assert_eq!(ConfusionMatrix::from_csv(&m.to_csv()).unwrap(), m);
    }

    #[test]
    fn record_rejects_bad_input() {
        let mut m = ConfusionMatrix::new(2);
        assert!(m.record(&[0, 1], &[0]).is_err());
        assert!(m.record(&[0], &[2]).is_err());
        assert_eq!(m.total(), 0);
    }

    #[test]
    fn recalls_skip_empty_rows() {
        let m = ConfusionMatrix::from_rows(&[vec![3, 1], vec![0, 0]]).unwrap();
        assert_eq!(m.recalls(), vec![Some(0.75), None]);
    }
}
