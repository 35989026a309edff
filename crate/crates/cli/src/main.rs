//! Command-line front end: dataset generation, training, evaluation, sweeps
//! and summary reports.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use cpmix::confusion::ConfusionMatrix;
use cpmix::data::{load_csv, save_csv, write_meta, DatasetMeta};
use cpmix::experiment::{load_data, run_experiment, sweep, ExperimentConfig};
use cpmix::model_io::read_model;
use cpmix::report::{evaluate, report_from_confusion, SubgroupThresholds};
use cpmix::{Dataset, Error, Mlp};

#[derive(Parser)]
#[command(
    name = "cpmix",
    version,
    about = "Confusion-pair mixup for long-tailed classification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the training and test CSVs (plus JSON sidecars) of a configured dataset.
    GenData {
        #[command(flatten)]
        config: ConfigArgs,
        /// Seed of the generated split; defaults to the first configured seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Destination directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every configured (method, seed) pair and write its artifacts.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Evaluate a saved model on a CSV test set.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// JSON sidecar or CSV of the training set; its class counts define the subgroups.
        #[arg(long)]
        train: PathBuf,
        #[arg(long, default_value_t = 100)]
        many_threshold: usize,
        #[arg(long, default_value_t = 20)]
        few_threshold: usize,
        #[arg(long)]
        group_size: Option<usize>,
        /// Write the metrics JSON here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeat the experiment over a list of imbalance factors.
    Sweep {
        /// Comma-separated imbalance factors.
        #[arg(long, value_delimiter = ',', required = true)]
        rhos: Vec<f64>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Summarize the runs below an output directory.
    Report {
        dir: PathBuf,
        /// Also write the per-run table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML experiment file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides of config keys: `--key value`, `--key=value`, or a bare `--flag` for true.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--KEY VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> anyhow::Result<ExperimentConfig> {
        let overrides = parse_overrides(&self.overrides)?;
        Ok(ExperimentConfig::resolve_file(self.config.as_deref(), &overrides)?)
    }
}

fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>, Error> {
    let mut out = Vec::new();
    let mut issues = Vec::new();
    let mut i = 0;
    while i < args.len() {
        let Some(flag) = args[i].strip_prefix("--") else {
            issues.push(cpmix::error::ConfigIssue {
                field: args[i].clone(),
                message: "expected a `--key` override".into(),
            });
            i += 1;
            continue;
        };
        if let Some((k, v)) = flag.split_once('=') {
            out.push((k.to_string(), v.to_string()));
            i += 1;
        } else if i + 1 < args.len() && !is_flag(&args[i + 1]) {
            out.push((flag.to_string(), args[i + 1].clone()));
            i += 2;
        } else {
            out.push((flag.to_string(), "true".into()));
            i += 1;
        }
    }
    if issues.is_empty() {
        Ok(out)
    } else {
        Err(Error::Config(issues))
    }
}

fn is_flag(s: &str) -> bool {
    s.starts_with("--") && s.len() > 2 && !s[2..].starts_with(|c: char| c.is_ascii_digit() || c == '.')
}

fn train_counts(path: &Path) -> anyhow::Result<Vec<usize>> {
    if path.extension().is_some_and(|e| e == "json") {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let meta: DatasetMeta = serde_json::from_str(&text)?;
        Ok(meta.class_counts)
    } else {
        let data: Dataset = load_csv(path).with_context(|| format!("loading {}", path.display()))?;
        Ok(data.class_counts().to_vec())
    }
}

fn gen_data(config: &ExperimentConfig, seed: Option<u64>, out: &Path) -> anyhow::Result<()> {
    let seed = seed.unwrap_or(config.seeds[0]);
    let split = load_data(config, seed)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    for (name, data) in [("train", &split.train), ("test", &split.test)] {
        save_csv(data, &out.join(format!("{name}.csv")))?;
        write_meta(data, &out.join(format!("{name}.json")))?;
    }
    println!(
        "wrote {} training and {} test rows ({} classes, imbalance {}) to {}",
        split.train.len(),
        split.test.len(),
        split.train.num_classes(),
        split.train.imbalance_factor(),
        out.display()
    );
    Ok(())
}

fn print_summaries<'a>(rows: impl IntoIterator<Item = &'a cpmix::experiment::RunSummary>) {
    println!(
        "{:>8} {:>10} {:>5} {:>8} {:>9} {:>7}",
        "rho", "method", "seed", "top1", "min_rec", "target"
    );
    for s in rows {
        println!(
            "{:>8} {:>10} {:>5} {:>8.4} {:>9.4} {:>7}",
            s.rho, s.method, s.seed, s.top1, s.minority_recall, s.target_confusion_sum
        );
    }
}

fn eval(
    model: &Path,
    test: &Path,
    train: &Path,
    thresholds: SubgroupThresholds,
    group_size: Option<usize>,
    out: Option<&Path>,
) -> anyhow::Result<()> {
    let file = fs::File::open(model).with_context(|| format!("opening {}", model.display()))?;
    let model: Mlp = read_model(BufReader::new(file))?;
    let test: Dataset = load_csv(test).with_context(|| format!("loading {}", test.display()))?;
    let counts = train_counts(train)?;
    let test = if test.num_classes() < counts.len() {
        Dataset::new(
            test.name(),
            test.features().clone(),
            test.labels().to_vec(),
            counts.len(),
        )?
    } else {
        test
    };
    let report = evaluate(&model, &test, &counts, thresholds, group_size)?;
    let text = serde_json::to_string_pretty(&report)? + "\n";
    match out {
        Some(path) => {
            fs::write(path, text)?;
            println!("top1 {:.4}", report.top1);
        }
        None => print!("{text}"),
    }
    Ok(())
}

/// Per-run rows found below `dir`, with accuracies recomputed from `confusion.csv`.
fn report(dir: &Path, csv: Option<&Path>) -> anyhow::Result<()> {
    let mut runs = Vec::new();
    collect_runs(dir, &mut runs)?;
    if runs.is_empty() {
        bail!("no runs found below {}", dir.display());
    }
    runs.sort();
    let mut table = String::from("run,top1,many,medium,few\n");
    let mut by_method: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let fmt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_default();
    for run in &runs {
        let confusion = ConfusionMatrix::from_csv(&fs::read_to_string(run.join("confusion.csv"))?)?;
        let meta: DatasetMeta = serde_json::from_str(&fs::read_to_string(run.join("dataset.json"))?)?;
        let thresholds = experiment_thresholds(run).unwrap_or_default();
        let r = report_from_confusion(confusion, &meta.class_counts, thresholds, None)?;
        let name = run.strip_prefix(dir).unwrap_or(run).display().to_string();
        table.push_str(&format!(
            "{name},{:.4},{},{},{}\n",
            r.top1,
            fmt(r.subgroup_acc.many),
            fmt(r.subgroup_acc.medium),
            fmt(r.subgroup_acc.few)
        ));
        let group = run
            .parent()
            .map(|p| p.strip_prefix(dir).unwrap_or(p).display().to_string())
            .unwrap_or_default();
        by_method.entry(group).or_default().push(r.top1);
    }
    print!("{}", table.replace(',', "\t"));
    println!();
    println!("{:<28} {:>5} {:>8} {:>8}", "group", "runs", "mean", "std");
    for (group, accs) in &by_method {
        let n = accs.len() as f64;
        let mean = accs.iter().sum::<f64>() / n;
        let var = accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
        println!("{group:<28} {:>5} {mean:>8.4} {:>8.4}", accs.len(), var.sqrt());
    }
    if let Some(path) = csv {
        fs::write(path, table)?;
    }
    Ok(())
}

/// Thresholds stored in the `config.toml` two levels above a run directory.
fn experiment_thresholds(run: &Path) -> Option<SubgroupThresholds> {
    let root = run.parent()?.parent()?;
    let config = ExperimentConfig::load(&root.join("config.toml")).ok()?;
    Some(config.thresholds())
}

fn collect_runs(dir: &Path, out: &mut Vec<PathBuf>) -> anyhow::Result<()> {
    if dir.join("confusion.csv").is_file() && dir.join("dataset.json").is_file() {
        out.push(dir.to_path_buf());
        return Ok(());
    }
    for entry in fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        if path.is_dir() {
            collect_runs(&path, out)?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::GenData { config, seed, out } => gen_data(&config.resolve()?, seed, &out),
        Command::Train { config } => {
            let config = config.resolve()?;
            let outcomes = run_experiment(&config)?;
            print_summaries(outcomes.iter().map(|o| &o.summary));
            println!("artifacts in {}", config.output_dir.display());
            Ok(())
        }
        Command::Eval {
            model,
            test,
            train,
            many_threshold,
            few_threshold,
            group_size,
            out,
        } => {
            let thresholds = SubgroupThresholds {
                many: many_threshold,
                few: few_threshold,
            };
            eval(&model, &test, &train, thresholds, group_size, out.as_deref())
        }
        Command::Sweep { rhos, config } => {
            let config = config.resolve()?;
            let rows = sweep(&config, &rhos)?;
            print_summaries(&rows);
            println!("sweep table in {}", config.output_dir.join("sweep.csv").display());
            Ok(())
        }
        Command::Report { dir, csv } => report(&dir, csv.as_deref()),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(
            Error::Config(_) | Error::InvalidParameter { .. } | Error::InfeasibleImbalance { .. } | Error::Parse { .. },
        ) => 2,
        Some(Error::Diverged { .. } | Error::NonFinite(_)) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
