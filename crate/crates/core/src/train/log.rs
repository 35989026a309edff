use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Statistics of one epoch. Regularizer losses are `None` before the second stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub learning_rate: f64,
    pub loss_erm: f64,
    pub loss_cp: Option<f64>,
    pub loss_mix: Option<f64>,
    pub train_acc: f64,
    /// Training samples misclassified during this epoch's batches.
    pub misclassified: u64,
    pub bag_total: u64,
    /// Confused classes drawn from the bag during this epoch.
    pub cp_draws: u64,
    pub test_top1: f64,
    pub test_many: Option<f64>,
    pub test_medium: Option<f64>,
    pub test_few: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub records: Vec<EpochRecord>,
    /// Excluded from the JSON-lines output, which must be reproducible.
    #[serde(skip)]
    pub wall_time_secs: f64,
}

impl TrainLog {
    pub fn last(&self) -> Option<&EpochRecord> {
        self.records.last()
    }

    /// One JSON object per epoch.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read_jsonl(text: &str) -> Result<Self> {
        let records = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<Vec<EpochRecord>, _>>()?;
        Ok(Self {
            records,
            wall_time_secs: 0.0,
        })
    }
}
