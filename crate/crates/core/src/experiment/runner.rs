use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use super::config::{DatasetKind, ExperimentConfig, Method};
use crate::data::{
    exponential_imbalance, load_csv, make_blobs, make_toy, write_meta, BlobsSpec, LabeledDataset, ToySpec,
};
use crate::error::{ConfigIssue, Error, Result};
use crate::model_io::write_model;
use crate::nn::MlpClassifier;
use crate::report::{evaluate, MetricsReport};
use crate::rng::{seeded, stream};
use crate::train::{finetune_classifier, train_cpmix_with, train_erm, train_vanilla_mixup, ErmLoss};

/// Training and test split of one seed.
pub struct DataSplit {
    pub train: LabeledDataset<f64>,
    pub test: LabeledDataset<f64>,
}

/// Builds the datasets described by `config` for `seed`.
pub fn load_data(config: &ExperimentConfig, seed: u64) -> Result<DataSplit> {
    let (train, test) = match config.dataset {
        DatasetKind::Toy => make_toy(&ToySpec::with_rho(config.rho), seed)?,
        DatasetKind::BlobsLt => {
            let (base, test) = make_blobs(&BlobsSpec::default(), seed)?;
            let train =
                exponential_imbalance(&base, config.rho, seed)?.with_name(format!("blobs-lt-rho{}", config.rho));
            (train, test)
        }
        DatasetKind::Csv => {
            let missing = |field: &str| {
                Error::Config(vec![ConfigIssue {
                    field: field.into(),
                    message: "required for the csv dataset".into(),
                }])
            };
            let train: LabeledDataset<f64> =
                load_csv(config.train_path.as_deref().ok_or_else(|| missing("train_path"))?)?;
            let test: LabeledDataset<f64> = load_csv(config.test_path.as_deref().ok_or_else(|| missing("test_path"))?)?;
            let train = if config.rho > 1.0 {
                exponential_imbalance(&train, config.rho, seed)?
            } else {
                train
            };
            (train, test)
        }
    };
    if train.dim() != test.dim() {
        return Err(Error::Shape {
            what: "test features",
            expected: train.dim(),
            found: test.dim(),
        });
    }
    if test.num_classes() > train.num_classes() {
        return Err(Error::ClassOutOfRange {
            class: test.num_classes() - 1,
            num_classes: train.num_classes(),
        });
    }
    let test = if test.num_classes() < train.num_classes() {
        LabeledDataset::new(
            test.name(),
            test.features().clone(),
            test.labels().to_vec(),
            train.num_classes(),
        )?
    } else {
        test
    };
    Ok(DataSplit { train, test })
}

/// Headline numbers of one (method, seed) run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub rho: f64,
    pub method: Method,
    pub seed: u64,
    pub top1: f64,
    pub minority_recall: f64,
    pub target_confusion_sum: u64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub report: MetricsReport,
    pub dir: PathBuf,
}

/// Minority classes and tracked confusions of a report.
///
/// The four-class toy tracks the two minority classes and the confusions of
/// each minority with its adjacent majority. Any other dataset treats the
/// classes with below-median training count as minorities and tracks every
/// minority sample predicted as a majority class.
pub fn minority_metrics(dataset: DatasetKind, report: &MetricsReport, train_counts: &[usize]) -> (f64, u64) {
    let c = &report.confusion;
    let (minority, target) = if dataset == DatasetKind::Toy && train_counts.len() == 4 {
        let target = ToySpec::ADJACENT_PAIRS.iter().map(|&(t, p)| c.get(t, p)).sum();
        (ToySpec::MINORITY.to_vec(), target)
    } else {
        let mut sorted = train_counts.to_vec();
        sorted.sort_unstable();
        let median = sorted[sorted.len() / 2];
        let minority: Vec<usize> = (0..train_counts.len()).filter(|&k| train_counts[k] < median).collect();
        let target = minority
            .iter()
            .flat_map(|&t| {
                (0..train_counts.len())
                    .filter(|p| !minority.contains(p))
                    .map(move |p| (t, p))
            })
            .map(|(t, p)| c.get(t, p))
            .sum();
        (minority, target)
    };
    let recalls: Vec<f64> = minority.iter().filter_map(|&k| report.per_class_acc[k]).collect();
    let recall = if recalls.is_empty() {
        0.0
    } else {
        recalls.iter().sum::<f64>() / recalls.len() as f64
    };
    (recall, target)
}

fn initial_model(config: &ExperimentConfig, data: &DataSplit, seed: u64) -> Result<MlpClassifier<f64>> {
    let mut dims = vec![data.train.dim()];
    dims.extend(&config.hidden);
    dims.push(data.train.num_classes());
    MlpClassifier::glorot(&dims, &mut seeded(seed, stream::INIT))
}

fn write_json<S: Serialize>(value: &S, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("cannot create output directory {}: {e}", path.display()),
        ))
    })
}

/// Trains one method on one seed and writes its artifacts into `dir`.
pub fn run_single(
    config: &ExperimentConfig,
    method: Method,
    seed: u64,
    data: &DataSplit,
    dir: &Path,
) -> Result<RunOutcome> {
    create_dir(dir)?;
    let started = Instant::now();
    let schedule = config.schedule(seed);
    let init = initial_model(config, data, seed)?;
    let (train, test) = (&data.train, &data.test);
    let (model, log, bag) = match method {
        Method::ErmCe | Method::ErmBs => {
            let loss = if method == Method::ErmCe {
                ErmLoss::CrossEntropy
            } else {
                ErmLoss::BalancedSoftmax
            };
            let (m, _, log) = train_erm(init, train, test, &schedule, loss)?;
            (m, log, None)
        }
        Method::Mixup => {
            let (m, log) = train_vanilla_mixup(init, train, test, &schedule, config.alpha)?;
            (m, log, None)
        }
        Method::BsMixreg | Method::Cpmix => {
            let mut mix = config.mix_config();
            if method == Method::BsMixreg {
                mix.gamma_cp = 0.0;
            }
            let (m, bag, log) = train_cpmix_with(init, train, test, &schedule, &mix, &config.cpmix_options())?;
            (m, log, Some(bag))
        }
    };
    let model = finetune_classifier(model, train, &schedule, seed)?;
    let group_size = (config.group_size > 0).then_some(config.group_size);
    let report = evaluate(&model, test, train.class_counts(), config.thresholds(), group_size)?;
    let (minority_recall, target_confusion_sum) = minority_metrics(config.dataset, &report, train.class_counts());
    let summary = RunSummary {
        rho: config.rho,
        method,
        seed,
        top1: report.top1,
        minority_recall,
        target_confusion_sum,
    };

    log.write_jsonl(BufWriter::new(File::create(dir.join("train_log.jsonl"))?))?;
    write_model(&model, BufWriter::new(File::create(dir.join("model.bin"))?))?;
    write_json(&report, &dir.join("metrics.json"))?;
    write_json(&summary, &dir.join("summary.json"))?;
    fs::write(dir.join("confusion.csv"), report.confusion.to_csv())?;
    if let Some(bag) = bag {
        fs::write(
            dir.join("bag.json"),
            serde_json::to_string_pretty(&bag.to_json())? + "\n",
        )?;
    }
    write_meta(train, &dir.join("dataset.json"))?;
    let timing = serde_json::json!({ "wall_time_secs": started.elapsed().as_secs_f64() });
    write_json(&timing, &dir.join("run.json"))?;
    Ok(RunOutcome {
        summary,
        report,
        dir: dir.to_path_buf(),
    })
}

/// Directory of one run below the experiment output directory.
pub fn run_dir(root: &Path, method: Method, seed: u64) -> PathBuf {
    root.join(method.as_str()).join(format!("seed-{seed}"))
}

/// Runs every (method, seed) pair of `config` into `config.output_dir`.
///
/// Layout: `<output_dir>/config.toml` plus `<output_dir>/<method>/seed-<s>/`
/// holding `train_log.jsonl`, `model.bin`, `metrics.json`, `summary.json`,
/// `confusion.csv`, `dataset.json`, `run.json` and, for the staged methods,
/// `bag.json`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunOutcome>> {
    config.validate()?;
    let root = &config.output_dir;
    create_dir(root)?;
    fs::write(root.join("config.toml"), config.to_toml_string())?;
    let mut outcomes = Vec::new();
    for &seed in &config.seeds {
        let data = load_data(config, seed)?;
        for &method in &config.methods {
            outcomes.push(run_single(config, method, seed, &data, &run_dir(root, method, seed))?);
        }
    }
    Ok(outcomes)
}

pub const SWEEP_HEADER: &str = "rho,method,seed,top1,minority_recall,target_confusion_sum";

fn sweep_line(s: &RunSummary) -> String {
    format!(
        "{},{},{},{},{},{}",
        s.rho, s.method, s.seed, s.top1, s.minority_recall, s.target_confusion_sum
    )
}

/// Repeats the experiment for every imbalance factor in `rhos`, each into
/// `<output_dir>/rho-<rho>/`, and writes the combined `<output_dir>/sweep.csv`.
pub fn sweep(config: &ExperimentConfig, rhos: &[f64]) -> Result<Vec<RunSummary>> {
    if rhos.is_empty() {
        return Err(Error::Config(vec![ConfigIssue {
            field: "rhos".into(),
            message: "at least one imbalance factor is required".into(),
        }]));
    }
    let mut checked = Vec::new();
    let mut issues = Vec::new();
    for &rho in rhos {
        let cfg = ExperimentConfig {
            rho,
            output_dir: config.output_dir.join(format!("rho-{rho}")),
            ..config.clone()
        };
        match cfg.validate() {
            Ok(()) => checked.push(cfg),
            Err(Error::Config(mut found)) => issues.append(&mut found),
            Err(e) => return Err(e),
        }
    }
    if !issues.is_empty() {
        return Err(Error::Config(issues));
    }
    create_dir(&config.output_dir)?;
    let mut rows = Vec::new();
    for cfg in &checked {
        rows.extend(run_experiment(cfg)?.into_iter().map(|o| o.summary));
    }
    let mut text = String::from(SWEEP_HEADER);
    text.push('\n');
    for r in &rows {
        text.push_str(&sweep_line(r));
        text.push('\n');
    }
    fs::write(config.output_dir.join("sweep.csv"), text)?;
    Ok(rows)
}
