//! Acceptance report: one PASS/FAIL line per criterion; exits nonzero if any fails.

mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use common::*;
use cpmix::confusion::{confusion_matrix, ConfusionPairBag};
use cpmix::data::ToySpec;
use cpmix::experiment::{run_experiment, sweep, DatasetKind, ExperimentConfig, Method, RunOutcome};
use cpmix::mixing::label_lambda;
use cpmix::nn::{balanced_softmax_loss, Loss, SoftLabel};
use rand::Rng;

struct Verdict {
    ok: bool,
    detail: String,
}

fn toy_config(out: &Path, methods: &[Method]) -> ExperimentConfig {
    ExperimentConfig {
        methods: methods.to_vec(),
        output_dir: out.to_path_buf(),
        ..ExperimentConfig::defaults_for(DatasetKind::Toy)
    }
}

fn by_method(outcomes: Vec<RunOutcome>) -> BTreeMap<Method, Vec<RunOutcome>> {
    let mut map: BTreeMap<Method, Vec<RunOutcome>> = BTreeMap::new();
    for o in outcomes {
        map.entry(o.summary.method).or_default().push(o);
    }
    for runs in map.values_mut() {
        runs.sort_by_key(|o| o.summary.seed);
    }
    map
}

fn mean_recall(o: &RunOutcome, classes: &[usize]) -> f64 {
    classes.iter().map(|&c| o.report.per_class_acc[c].unwrap()).sum::<f64>() / classes.len() as f64
}

fn count<T>(a: &[T], b: &[T], pred: impl Fn(&T, &T) -> bool) -> usize {
    a.iter().zip(b).filter(|(x, y)| pred(x, y)).count()
}

fn gradients() -> Verdict {
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let mut r = rng(1000 + seed);
        let data = random_dataset(80, 3, 4, &mut r);
        let model = random_model(&[3, 10, 4], &mut r);
        let x = random_inputs(16, 3, &mut r);
        let y: Vec<_> = (0..16).map(|i| SoftLabel::one_hot(i % 4, 4).unwrap()).collect();
        worst = worst.max(max_fd_error(&model, &x, &y, &Loss::CrossEntropy, 50, &mut r));
        let bs = Loss::balanced_softmax(data.class_counts()).unwrap();
        worst = worst.max(max_fd_error(&model, &x, &y, &bs, 50, &mut r));
        let (cx, cy) = cp_mixed_batch(&data, 16, &mut r);
        worst = worst.max(max_fd_error(&model, &cx, &cy, &Loss::CrossEntropy, 50, &mut r));
    }
    Verdict {
        ok: worst < 1e-4,
        detail: format!("CE, BS and CP-mixed soft CE over 20 seeds x 50 coords; worst relative error {worst:.2e}"),
    }
}

fn formulas() -> Verdict {
    let lam = label_lambda(0.5, 0.5, 1000, 50).unwrap();
    let bs = balanced_softmax_loss(&[0.0f64, 0.0], 1, &[1000, 50]).unwrap().value;
    let ok = (lam - 0.273_809_523_809_523_8).abs() < 1e-9 && (bs - 3.044_522_437_723_423).abs() < 1e-9;
    Verdict {
        ok,
        detail: format!("label weight {lam:.10}, balanced-softmax loss {bs:.10}"),
    }
}

fn confusion_oracle() -> Verdict {
    let mut r = rng(2000);
    let mut mismatches = 0;
    for _ in 0..20 {
        let classes = r.random_range(2..8);
        let n = r.random_range(classes..=1000);
        let data = random_dataset(n, 4, classes, &mut r);
        let model = random_model(&[4, 8, classes], &mut r);
        let cm = confusion_matrix(&model, &data).unwrap();
        let preds: Vec<usize> = (0..n).map(|i| model.predict(data.row(i)).unwrap()).collect();
        let mut bag = ConfusionPairBag::new(classes);
        bag.record_batch(data.labels(), &preds).unwrap();
        for t in 0..classes {
            for p in 0..classes {
                let naive = (0..n).filter(|&i| data.label(i) == t && preds[i] == p).count() as u64;
                let in_bag = if t == p { 0 } else { naive };
                if cm.get(t, p) != naive || bag.multiplicity(t, p) != in_bag {
                    mismatches += 1;
                }
            }
        }
    }
    Verdict {
        ok: mismatches == 0,
        detail: format!("20 random instances, {mismatches} mismatched cells"),
    }
}

fn toy_reproduction(tmp: &Path) -> Verdict {
    let config = toy_config(&tmp.join("toy"), &[Method::ErmCe, Method::Mixup, Method::Cpmix]);
    let runs = by_method(run_experiment(&config).unwrap());
    let (erm, mix, cp) = (&runs[&Method::ErmCe], &runs[&Method::Mixup], &runs[&Method::Cpmix]);
    let minority = |v: &Vec<RunOutcome>| v.iter().map(|o| mean_recall(o, &ToySpec::MINORITY)).collect::<Vec<_>>();
    let majority = |v: &Vec<RunOutcome>| v.iter().map(|o| mean_recall(o, &ToySpec::MAJORITY)).collect::<Vec<_>>();
    let target = |v: &Vec<RunOutcome>| v.iter().map(|o| o.summary.target_confusion_sum).collect::<Vec<_>>();
    let a = count(&minority(erm), &majority(erm), |mi, ma| mi < ma);
    let b = count(&minority(mix), &minority(erm), |m, e| m <= e);
    let c1 = count(&target(cp), &target(erm), |c, e| c < e);
    let c2 = count(&minority(cp), &minority(erm), |c, e| c - e >= 0.05);
    Verdict {
        ok: a >= 4 && b >= 3 && c1 >= 4 && c2 >= 4,
        detail: format!(
            "(a) ERM minority < majority recall {a}/5; (b) mixup no minority gain {b}/5; \
             (c) CP-Mix lower target confusion {c1}/5, minority recall +5pt {c2}/5"
        ),
    }
}

/// Spearman correlation with average ranks for ties.
fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            for k in i..=j {
                r[idx[k]] = (i + j) as f64 / 2.0 + 1.0;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

fn imbalance_trend(tmp: &Path) -> Verdict {
    let rhos = [2.0, 5.0, 10.0, 20.0, 50.0];
    let config = toy_config(&tmp.join("trend"), &[Method::ErmCe]);
    let rows = sweep(&config, &rhos).unwrap();
    let means: Vec<f64> = rhos
        .iter()
        .map(|&rho| {
            let v: Vec<f64> = rows
                .iter()
                .filter(|r| r.rho == rho)
                .map(|r| r.target_confusion_sum as f64)
                .collect();
            v.iter().sum::<f64>() / v.len() as f64
        })
        .collect();
    let rho_s = spearman(&rhos, &means);
    Verdict {
        ok: rho_s > 0.8,
        detail: format!("seed-mean ERM target confusion {means:?}; Spearman {rho_s:.3}"),
    }
}

/// Runs one blobs-LT arm from its own config file.
fn blobs_arm(tmp: &Path, method: Method) -> Vec<RunOutcome> {
    let out = tmp.join("blobs").join(method.as_str());
    let file = tmp.join(format!("{method}.toml"));
    let text = format!(
        "dataset = \"blobs-lt\"\nrho = 100.0\nmethods = [\"{method}\"]\nseeds = [0, 1, 2, 3, 4]\noutput_dir = {:?}\n",
        out.display().to_string()
    );
    std::fs::write(&file, text).unwrap();
    let config = ExperimentConfig::load(&file).unwrap();
    let mut runs = run_experiment(&config).unwrap();
    runs.sort_by_key(|o| o.summary.seed);
    runs
}

fn blobs_benchmark(arms: &BTreeMap<Method, Vec<RunOutcome>>) -> Verdict {
    let top1 = |m: Method| arms[&m].iter().map(|o| o.report.top1).collect::<Vec<_>>();
    let few = |m: Method| {
        arms[&m]
            .iter()
            .map(|o| o.report.subgroup_acc.few.unwrap())
            .collect::<Vec<_>>()
    };
    let vs_ce = count(&top1(Method::Cpmix), &top1(Method::ErmCe), |a, b| a > b);
    let vs_mix = count(&top1(Method::Cpmix), &top1(Method::Mixup), |a, b| a > b);
    let few_gain = count(&few(Method::Cpmix), &few(Method::ErmCe), |a, b| a > b);
    let mean = |v: Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
    Verdict {
        ok: vs_ce >= 4 && vs_mix >= 4 && few_gain >= 4,
        detail: format!(
            "CP-Mix top-1 > CE {vs_ce}/5, > Mixup {vs_mix}/5, few > CE few {few_gain}/5 \
             (mean top-1 CE {:.3}, Mixup {:.3}, CP-Mix {:.3}; few CE {:.3}, CP-Mix {:.3})",
            mean(top1(Method::ErmCe)),
            mean(top1(Method::Mixup)),
            mean(top1(Method::Cpmix)),
            mean(few(Method::ErmCe)),
            mean(few(Method::Cpmix)),
        ),
    }
}

fn ablation(arms: &BTreeMap<Method, Vec<RunOutcome>>) -> Verdict {
    let four = [Method::ErmCe, Method::ErmBs, Method::BsMixreg, Method::Cpmix];
    let reference = &arms[&Method::ErmCe][0].report;
    let comparable = four.iter().all(|m| {
        arms[m].len() == 5
            && arms[m].iter().all(|o| {
                o.report.subgroups == reference.subgroups
                    && o.report.confusion.num_classes() == reference.confusion.num_classes()
                    && o.report.confusion.total() == reference.confusion.total()
            })
    });
    let top1 = |m: Method| arms[&m].iter().map(|o| o.report.top1).collect::<Vec<_>>();
    let bs_ge_ce = count(&top1(Method::ErmBs), &top1(Method::ErmCe), |a, b| a >= b);
    let means: Vec<String> = four
        .iter()
        .map(|&m| format!("{m} {:.3}", top1(m).iter().sum::<f64>() / 5.0))
        .collect();
    Verdict {
        ok: comparable && bs_ge_ce >= 4,
        detail: format!(
            "four arms from separate config files, comparable reports: {comparable}; BS >= CE {bs_ge_ce}/5; mean top-1 {}",
            means.join(", ")
        ),
    }
}

fn determinism(tmp: &Path) -> Verdict {
    let mut identical = true;
    let mut files = 0;
    for dataset in [DatasetKind::Toy, DatasetKind::BlobsLt] {
        let make = |tag: &str| ExperimentConfig {
            seeds: vec![3],
            epochs: 4,
            cp_start_epoch: 2,
            lr_milestones: vec![3],
            output_dir: tmp.join(format!("det-{dataset}-{tag}")),
            ..ExperimentConfig::defaults_for(dataset)
        };
        let (a, b) = (run_experiment(&make("a")).unwrap(), run_experiment(&make("b")).unwrap());
        for (x, y) in a.iter().zip(&b) {
            for file in ["metrics.json", "summary.json"] {
                files += 1;
                identical &= std::fs::read(x.dir.join(file)).unwrap() == std::fs::read(y.dir.join(file)).unwrap();
            }
        }
    }
    Verdict {
        ok: identical && files > 0,
        detail: format!("{files} metric files compared across reruns, identical: {identical}"),
    }
}

fn sampler_statistics() -> Verdict {
    let checks = stats::all();
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.ok)
        .map(|c| format!("{} (observed {})", c.name, c.observed))
        .collect();
    Verdict {
        ok: failed.is_empty(),
        detail: if failed.is_empty() {
            format!("{} checks passed", checks.len())
        } else {
            format!("failed: {}", failed.join("; "))
        },
    }
}

fn report(number: usize, title: &str, limit: Duration, run: impl FnOnce() -> Verdict) -> bool {
    let started = Instant::now();
    let verdict = run();
    let elapsed = started.elapsed();
    let ok = verdict.ok && elapsed < limit;
    println!(
        "{} criterion {number}: {title} [{:.1}s, limit {}s] {}",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs(),
        verdict.detail
    );
    ok
}

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    let tmp = tmp.path();
    let secs = Duration::from_secs;
    let mut results = vec![
        report(1, "gradient correctness", secs(10), gradients),
        report(2, "formula fidelity", secs(1), formulas),
        report(3, "confusion-oracle equivalence", secs(10), confusion_oracle),
        report(4, "toy reproduction", secs(120), || toy_reproduction(tmp)),
        report(5, "imbalance trend", secs(300), || imbalance_trend(tmp)),
    ];

    let started = Instant::now();
    let arms: BTreeMap<Method, Vec<RunOutcome>> = Method::ALL.iter().map(|&m| (m, blobs_arm(tmp, m))).collect();
    let shared = started.elapsed();
    results.push(report(
        6,
        "multi-class desk benchmark",
        secs(600).saturating_sub(shared),
        || blobs_benchmark(&arms),
    ));
    results.push(report(7, "ablation skeleton", secs(900).saturating_sub(shared), || {
        ablation(&arms)
    }));
    println!(
        "      (blobs-LT arms trained once for criteria 6 and 7 in {:.1}s)",
        shared.as_secs_f64()
    );

    results.push(report(8, "determinism", secs(120), || determinism(tmp)));
    results.push(report(9, "sampler statistics", secs(30), sampler_statistics));

    let passed = results.iter().filter(|&&ok| ok).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
