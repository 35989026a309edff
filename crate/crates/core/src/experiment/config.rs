use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::confusion::PairSampling;
use crate::error::{ConfigIssue, Error, Result};
use crate::mixing::MixConfig;
use crate::nn::OptimizerKind;
use crate::report::SubgroupThresholds;
use crate::train::{CpMixOptions, FinetuneConfig, LrSchedule, OptimizerConfig, TrainSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetKind {
    Toy,
    BlobsLt,
    Csv,
}

impl DatasetKind {
    fn as_str(self) -> &'static str {
        match self {
            DatasetKind::Toy => "toy",
            DatasetKind::BlobsLt => "blobs-lt",
            DatasetKind::Csv => "csv",
        }
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for DatasetKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "toy" => Ok(DatasetKind::Toy),
            "blobs-lt" => Ok(DatasetKind::BlobsLt),
            "csv" => Ok(DatasetKind::Csv),
            other => Err(format!("unknown dataset `{other}`, expected toy, blobs-lt or csv")),
        }
    }
}

/// Training recipe of one experiment arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Cross-entropy ERM.
    ErmCe,
    /// Balanced-softmax ERM.
    ErmBs,
    /// Vanilla mixup on every batch.
    Mixup,
    /// Balanced softmax plus the in-batch mixup regularizer only.
    BsMixreg,
    /// Full two-stage confusion-pair mixup.
    Cpmix,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::ErmCe,
        Method::ErmBs,
        Method::Mixup,
        Method::BsMixreg,
        Method::Cpmix,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::ErmCe => "erm_ce",
            Method::ErmBs => "erm_bs",
            Method::Mixup => "mixup",
            Method::BsMixreg => "bs_mixreg",
            Method::Cpmix => "cpmix",
        }
    }

    fn uses_stages(self) -> bool {
        matches!(self, Method::BsMixreg | Method::Cpmix)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerName {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrScheduleName {
    Constant,
    Multistep,
    Cosine,
}

/// Flat experiment description. Every field is a top-level key of the TOML
/// file and can be overridden from the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetKind,
    /// Imbalance factor; for `csv` a value above 1 subsamples the loaded training set.
    pub rho: f64,
    pub train_path: Option<PathBuf>,
    pub test_path: Option<PathBuf>,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,

    pub hidden: Vec<usize>,

    pub optimizer: OptimizerName,
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub lr_schedule: LrScheduleName,
    pub lr_milestones: Vec<usize>,
    pub lr_decay: f64,
    pub epochs: usize,
    pub cp_start_epoch: usize,
    pub batch_size: usize,
    pub mix_batch_size: usize,

    pub alpha: f64,
    pub t: f64,
    pub gamma_cp: f64,
    pub gamma_mix: f64,
    pub pair_sampling: PairSampling,
    pub bag_decay: Option<f64>,
    pub record_in_stage2: bool,
    pub label_aware_mix_reg: bool,

    pub finetune: bool,
    pub finetune_epochs: usize,
    pub finetune_lr: f64,
    pub finetune_momentum: f64,
    pub finetune_weight_decay: f64,

    pub many_threshold: usize,
    pub few_threshold: usize,
    /// Block size of the grouped confusion matrix; 0 disables it.
    pub group_size: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::defaults_for(DatasetKind::Toy)
    }
}

impl ExperimentConfig {
    /// Recommended settings for each dataset.
    pub fn defaults_for(dataset: DatasetKind) -> Self {
        let toy = TrainSchedule::toy(0);
        let ft = FinetuneConfig::default();
        let base = Self {
            dataset,
            rho: 20.0,
            train_path: None,
            test_path: None,
            methods: Method::ALL.to_vec(),
            seeds: vec![0, 1, 2, 3, 4],
            output_dir: PathBuf::from("runs"),
            hidden: vec![100],
            optimizer: OptimizerName::Adam,
            learning_rate: toy.optimizer.learning_rate,
            momentum: 0.9,
            weight_decay: 0.0,
            lr_schedule: LrScheduleName::Constant,
            lr_milestones: Vec::new(),
            lr_decay: 0.1,
            epochs: toy.epochs,
            cp_start_epoch: toy.cp_start_epoch,
            batch_size: toy.batch_size,
            mix_batch_size: toy.mix_batch_size,
            alpha: 0.2,
            t: 0.5,
            gamma_cp: 1.0,
            gamma_mix: 1.0,
            pair_sampling: PairSampling::Frequency,
            bag_decay: None,
            record_in_stage2: true,
            label_aware_mix_reg: false,
            finetune: ft.enabled,
            finetune_epochs: ft.epochs,
            finetune_lr: ft.learning_rate,
            finetune_momentum: ft.momentum,
            finetune_weight_decay: ft.weight_decay,
            many_threshold: SubgroupThresholds::default().many,
            few_threshold: SubgroupThresholds::default().few,
            group_size: 0,
        };
        match dataset {
            DatasetKind::Toy => base,
            DatasetKind::BlobsLt | DatasetKind::Csv => Self {
                rho: if dataset == DatasetKind::Csv { 1.0 } else { 100.0 },
                hidden: vec![64],
                optimizer: OptimizerName::Sgd,
                learning_rate: 0.05,
                weight_decay: 5e-4,
                lr_schedule: LrScheduleName::Multistep,
                lr_milestones: vec![25, 28],
                epochs: 30,
                cp_start_epoch: 20,
                batch_size: 64,
                mix_batch_size: 64,
                alpha: 1.0,
                ..base
            },
        }
    }

    /// Parses a TOML document on top of the defaults of its `dataset`.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: Table = text.parse().map_err(|e: toml::de::Error| {
            Error::Config(vec![ConfigIssue {
                field: "<file>".into(),
                message: e.message().to_string(),
            }])
        })?;
        Self::resolve(Some(table), &[])
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::resolve_file(Some(path), &[])
    }

    /// [`resolve`](Self::resolve) with the optional TOML file read from `path`.
    pub fn resolve_file(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let file = match path {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                let table: Table = text.parse().map_err(|e: toml::de::Error| {
                    Error::Config(vec![ConfigIssue {
                        field: path.display().to_string(),
                        message: e.message().to_string(),
                    }])
                })?;
                Some(table)
            }
            None => None,
        };
        Self::resolve(file, overrides)
    }

    /// Layers defaults < `file` < `overrides` (`key`, raw value) and validates.
    ///
    /// Raw override values are read as TOML values when possible and as bare
    /// strings otherwise; a comma-separated list or a single value is accepted
    /// for array-valued keys.
    pub fn resolve(file: Option<Table>, overrides: &[(String, String)]) -> Result<Self> {
        let mut issues = Vec::new();
        let mut layered = file.unwrap_or_default();
        for (key, raw) in overrides {
            layered.insert(key.replace('-', "_"), parse_raw(raw));
        }
        let dataset = match layered.get("dataset") {
            None => DatasetKind::Toy,
            Some(Value::String(s)) => match s.parse() {
                Ok(d) => d,
                Err(message) => {
                    return Err(Error::Config(vec![ConfigIssue {
                        field: "dataset".into(),
                        message,
                    }]))
                }
            },
            Some(other) => {
                return Err(Error::Config(vec![ConfigIssue {
                    field: "dataset".into(),
                    message: format!("expected a string, found {}", other.type_str()),
                }]))
            }
        };
        let defaults = Self::defaults_for(dataset);
        let mut merged = Table::try_from(&defaults).expect("defaults serialize to a table");
        for (key, mut value) in layered {
            if let Some(Value::Array(_)) = merged.get(&key) {
                if !matches!(value, Value::Array(_)) {
                    value = Value::Array(vec![value]);
                }
            }
            let mut single = Table::new();
            single.insert(key.clone(), value.clone());
            match Value::Table(single).try_into::<ExperimentConfig>() {
                Ok(_) => {
                    merged.insert(key, value);
                }
                Err(e) => issues.push(ConfigIssue {
                    field: key,
                    message: e.message().trim().to_string(),
                }),
            }
        }
        let config: ExperimentConfig = Value::Table(merged).try_into().map_err(|e: toml::de::Error| {
            Error::Config(vec![ConfigIssue {
                field: "<config>".into(),
                message: e.message().to_string(),
            }])
        })?;
        if let Err(Error::Config(mut semantic)) = config.validate() {
            issues.append(&mut semantic);
        }
        if issues.is_empty() {
            Ok(config)
        } else {
            Err(Error::Config(issues))
        }
    }

    /// Semantic and method/field compatibility checks, all reported at once.
    pub fn validate(&self) -> Result<()> {
        let mut issues = Vec::new();
        let mut bad = |field: &str, message: String| {
            issues.push(ConfigIssue {
                field: field.into(),
                message,
            })
        };
        if !(self.rho >= 1.0 && self.rho.is_finite()) {
            bad("rho", format!("{} must be a finite number >= 1", self.rho));
        }
        match self.dataset {
            DatasetKind::Csv => {
                if self.train_path.is_none() {
                    bad("train_path", "required for the csv dataset".into());
                }
                if self.test_path.is_none() {
                    bad("test_path", "required for the csv dataset".into());
                }
            }
            _ => {
                if self.train_path.is_some() {
                    bad(
                        "train_path",
                        format!("only valid with dataset = \"csv\", not {}", self.dataset),
                    );
                }
                if self.test_path.is_some() {
                    bad(
                        "test_path",
                        format!("only valid with dataset = \"csv\", not {}", self.dataset),
                    );
                }
            }
        }
        if self.methods.is_empty() {
            bad("methods", "at least one method is required".into());
        }
        let mut seen = Vec::new();
        for m in &self.methods {
            if seen.contains(m) {
                bad("methods", format!("`{m}` listed twice"));
            }
            seen.push(*m);
        }
        if self.seeds.is_empty() {
            bad("seeds", "at least one seed is required".into());
        }
        if self.hidden.contains(&0) {
            bad("hidden", "layer widths must be positive".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            bad("learning_rate", "must be positive".into());
        }
        if !(0.0..1.0).contains(&self.momentum) {
            bad("momentum", "must lie in [0, 1)".into());
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            bad("weight_decay", "must be nonnegative".into());
        }
        if !(self.lr_decay > 0.0 && self.lr_decay.is_finite()) {
            bad("lr_decay", "must be positive".into());
        }
        if self.lr_schedule == LrScheduleName::Multistep {
            if self.lr_milestones.is_empty() {
                bad(
                    "lr_milestones",
                    "multistep schedule needs at least one milestone".into(),
                );
            }
            if self.lr_milestones.windows(2).any(|w| w[0] >= w[1]) {
                bad("lr_milestones", "must be strictly increasing".into());
            }
        }
        if self.epochs == 0 {
            bad("epochs", "must be at least 1".into());
        }
        if self.cp_start_epoch > self.epochs {
            bad(
                "cp_start_epoch",
                format!("{} exceeds epochs ({})", self.cp_start_epoch, self.epochs),
            );
        } else if self.cp_start_epoch == self.epochs && self.methods.iter().any(|m| m.uses_stages()) {
            bad(
                "cp_start_epoch",
                "equals epochs, so the regularized stage of cpmix/bs_mixreg never runs".into(),
            );
        }
        if self.batch_size == 0 {
            bad("batch_size", "must be at least 1".into());
        }
        if self.mix_batch_size == 0 {
            bad("mix_batch_size", "must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            bad("alpha", "must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.t) {
            bad("t", "must lie in [0, 1]".into());
        }
        if !(self.gamma_cp >= 0.0 && self.gamma_cp.is_finite()) {
            bad("gamma_cp", "must be nonnegative".into());
        }
        if !(self.gamma_mix >= 0.0 && self.gamma_mix.is_finite()) {
            bad("gamma_mix", "must be nonnegative".into());
        }
        if self.methods.contains(&Method::Cpmix) && self.gamma_cp == 0.0 {
            bad(
                "gamma_cp",
                "is 0, which turns cpmix into bs_mixreg; list bs_mixreg instead".into(),
            );
        }
        if self.methods.contains(&Method::BsMixreg) && self.gamma_mix == 0.0 {
            bad(
                "gamma_mix",
                "is 0, which turns bs_mixreg into erm_bs; list erm_bs instead".into(),
            );
        }
        if let Some(f) = self.bag_decay {
            if !(f > 0.0 && f <= 1.0) {
                bad("bag_decay", format!("{f} must lie in (0, 1]"));
            }
        }
        if self.finetune && !(self.finetune_lr > 0.0 && self.finetune_lr.is_finite()) {
            bad("finetune_lr", "must be positive".into());
        }
        if !(0.0..1.0).contains(&self.finetune_momentum) {
            bad("finetune_momentum", "must lie in [0, 1)".into());
        }
        if self.few_threshold > self.many_threshold {
            bad(
                "few_threshold",
                format!(
                    "{} exceeds many_threshold ({})",
                    self.few_threshold, self.many_threshold
                ),
            );
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(issues))
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn mix_config(&self) -> MixConfig {
        MixConfig {
            alpha: self.alpha,
            t: self.t,
            gamma_cp: self.gamma_cp,
            gamma_mix: self.gamma_mix,
        }
    }

    pub fn cpmix_options(&self) -> CpMixOptions {
        CpMixOptions {
            sampling: self.pair_sampling,
            bag_decay: self.bag_decay,
            record_in_stage2: self.record_in_stage2,
            label_aware_mix_reg: self.label_aware_mix_reg,
        }
    }

    pub fn thresholds(&self) -> SubgroupThresholds {
        SubgroupThresholds {
            many: self.many_threshold,
            few: self.few_threshold,
        }
    }

    pub fn schedule(&self, seed: u64) -> TrainSchedule {
        let kind = match self.optimizer {
            OptimizerName::Sgd => OptimizerKind::SgdMomentum {
                momentum: self.momentum,
            },
            OptimizerName::Adam => OptimizerKind::adam(),
        };
        let lr_schedule = match self.lr_schedule {
            LrScheduleName::Constant => LrSchedule::Constant,
            LrScheduleName::Multistep => LrSchedule::MultiStep {
                milestones: self.lr_milestones.clone(),
                gamma: self.lr_decay,
            },
            LrScheduleName::Cosine => LrSchedule::Cosine,
        };
        TrainSchedule {
            epochs: self.epochs,
            cp_start_epoch: self.cp_start_epoch,
            batch_size: self.batch_size,
            mix_batch_size: self.mix_batch_size,
            optimizer: OptimizerConfig {
                kind,
                learning_rate: self.learning_rate,
                weight_decay: self.weight_decay,
            },
            lr_schedule,
            seed,
            finetune: FinetuneConfig {
                enabled: self.finetune,
                epochs: self.finetune_epochs,
                learning_rate: self.finetune_lr,
                momentum: self.finetune_momentum,
                weight_decay: self.finetune_weight_decay,
            },
        }
    }
}

fn parse_raw(raw: &str) -> Value {
    if let Some(v) = parse_toml_value(raw) {
        return v;
    }
    if raw.contains(',') {
        let items = raw
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| parse_toml_value(s).unwrap_or_else(|| Value::String(s.to_string())))
            .collect();
        return Value::Array(items);
    }
    Value::String(raw.to_string())
}

fn parse_toml_value(raw: &str) -> Option<Value> {
    let doc: Table = format!("v = {raw}").parse().ok()?;
    doc.get("v").cloned()
}
