use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::OptimizerKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LrSchedule {
    Constant,
    /// Multiply by `gamma` at the start of every epoch listed in `milestones` (1-based).
    MultiStep {
        milestones: Vec<usize>,
        gamma: f64,
    },
    /// Half-cosine from the base rate toward zero over the run.
    Cosine,
}

impl LrSchedule {
    /// Multiplier of the base learning rate for 1-based `epoch` out of `total`.
    pub fn factor(&self, epoch: usize, total: usize) -> f64 {
        match self {
            LrSchedule::Constant => 1.0,
            LrSchedule::MultiStep { milestones, gamma } => {
                let passed = milestones.iter().filter(|&&m| epoch >= m).count();
                gamma.powi(passed as i32)
            }
            LrSchedule::Cosine => {
                let progress = (epoch.saturating_sub(1)) as f64 / total.max(1) as f64;
                0.5 * (1.0 + (std::f64::consts::PI * progress).cos())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    pub weight_decay: f64,
}

/// Class-balanced retraining of the output layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinetuneConfig {
    pub enabled: bool,
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
}

impl Default for FinetuneConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            epochs: 10,
            learning_rate: 0.05,
            momentum: 0.9,
            weight_decay: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSchedule {
    pub epochs: usize,
    /// Regularization runs in epochs strictly after this one.
    pub cp_start_epoch: usize,
    pub batch_size: usize,
    pub mix_batch_size: usize,
    pub optimizer: OptimizerConfig,
    pub lr_schedule: LrSchedule,
    pub seed: u64,
    pub finetune: FinetuneConfig,
}

impl TrainSchedule {
    /// Adam at 0.1, ten epochs, batches of 100: the four-class toy recipe.
    pub fn toy(seed: u64) -> Self {
        Self {
            epochs: 10,
            cp_start_epoch: 0,
            batch_size: 100,
            mix_batch_size: 100,
            optimizer: OptimizerConfig {
                kind: OptimizerKind::adam(),
                learning_rate: 0.1,
                weight_decay: 0.0,
            },
            lr_schedule: LrSchedule::Constant,
            seed,
            finetune: FinetuneConfig::default(),
        }
    }

    /// Stage one for the first two thirds of the run.
    pub fn default_cp_start(epochs: usize) -> usize {
        2 * epochs / 3
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: String| Err(Error::InvalidParameter { name, reason });
        if self.epochs == 0 {
            return bad("epochs", "must be at least 1".into());
        }
        if self.cp_start_epoch > self.epochs {
            return bad(
                "cp_start_epoch",
                format!("{} exceeds epochs ({})", self.cp_start_epoch, self.epochs),
            );
        }
        if self.batch_size == 0 {
            return bad("batch_size", "must be at least 1".into());
        }
        if self.mix_batch_size == 0 {
            return bad("mix_batch_size", "must be at least 1".into());
        }
        if self.optimizer.learning_rate.is_nan() || self.optimizer.learning_rate <= 0.0 {
            return bad("learning_rate", "must be positive".into());
        }
        if let LrSchedule::MultiStep { gamma, .. } = self.lr_schedule {
            if gamma.is_nan() || gamma <= 0.0 {
                return bad("lr_decay", "must be positive".into());
            }
        }
        if self.finetune.enabled && (self.finetune.learning_rate.is_nan() || self.finetune.learning_rate <= 0.0) {
            return bad("finetune_lr", "must be positive".into());
        }
        Ok(())
    }
}
