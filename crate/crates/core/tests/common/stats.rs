//! Statistical checks of the samplers, shared by the sampler tests and the
//! acceptance report.

use cpmix::confusion::{build_cp_batch, ConfusionPairBag};
use cpmix::data::BalancedSampler;
use cpmix::mixing::{label_lambda, sample_lambda};
use cpmix::nn::Matrix;
use cpmix::rng::seeded;
use cpmix::Dataset;

pub const DRAWS: usize = 100_000;

/// Outcome of one statistical check.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub observed: f64,
    pub ok: bool,
}

impl Check {
    fn new(name: impl Into<String>, observed: f64, ok: bool) -> Self {
        Self {
            name: name.into(),
            observed,
            ok,
        }
    }
}

fn lambdas(alpha: f64, seed: u64) -> Vec<f64> {
    let mut r = seeded(seed, 77);
    (0..DRAWS).map(|_| sample_lambda(alpha, &mut r).unwrap()).collect()
}

/// Kolmogorov-Smirnov distance between Beta(1, 1) draws and the uniform CDF.
pub fn beta_uniform_ks() -> Check {
    let mut v = lambdas(1.0, 1);
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len() as f64;
    let d = v
        .iter()
        .enumerate()
        .map(|(i, &x)| ((i + 1) as f64 / n - x).max(x - i as f64 / n))
        .fold(0.0, f64::max);
    Check::new("Beta(1,1) KS statistic < 0.01", d, d < 0.01)
}

pub fn beta_means() -> Vec<Check> {
    [0.2, 0.5, 1.0, 1.5, 3.0]
        .iter()
        .enumerate()
        .map(|(i, &alpha)| {
            let v = lambdas(alpha, 10 + i as u64);
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            Check::new(
                format!("Beta({alpha},{alpha}) mean 0.5 +- 0.01"),
                mean,
                (mean - 0.5).abs() <= 0.01,
            )
        })
        .collect()
}

pub fn beta_variance() -> Check {
    let v = lambdas(1.5, 3);
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
    Check::new(
        "Beta(1.5,1.5) variance 0.0625 +- 0.005",
        var,
        (var - 0.0625).abs() <= 0.005,
    )
}

/// Mean label weight under `lambda ~ Beta(1, 1)` against `t / 2 + (1 - t) n2 / (n1 + n2)`.
pub fn label_weight_mean() -> Check {
    let v = lambdas(1.0, 4);
    let (t, n1, n2) = (0.5, 1000, 50);
    let mean = v.iter().map(|&l| label_lambda(l, t, n1, n2).unwrap()).sum::<f64>() / v.len() as f64;
    let expected = 0.5 * t + (1.0 - t) * 50.0 / 1050.0;
    Check::new(
        "mean label weight matches expectation +- 0.005",
        mean,
        (mean - expected).abs() <= 0.005,
    )
}

pub fn empty_bag_is_uniform() -> Check {
    let classes = 6;
    let bag = ConfusionPairBag::new(classes);
    let mut r = seeded(5, 77);
    let mut freq = vec![0usize; classes];
    for _ in 0..DRAWS {
        freq[bag.sample_confused_class(2, &mut r)] += 1;
    }
    let worst = (0..classes)
        .filter(|&c| c != 2)
        .map(|c| (freq[c] as f64 / DRAWS as f64 - 1.0 / (classes - 1) as f64).abs())
        .fold(0.0, f64::max);
    Check::new(
        "empty bag: confused class uniform over others +- 0.01",
        worst,
        freq[2] == 0 && worst <= 0.01,
    )
}

pub fn bag_frequency_weighting() -> Check {
    let mut bag = ConfusionPairBag::new(3);
    bag.record_batch(&[0, 0, 0, 0], &[1, 1, 1, 2]).unwrap();
    let mut r = seeded(6, 77);
    let ones = (0..DRAWS).filter(|_| bag.sample_confused_class(0, &mut r) == 1).count();
    let f = ones as f64 / DRAWS as f64;
    Check::new(
        "bag {(0,1):3,(0,2):1}: class 1 frequency 0.75 +- 0.01",
        f,
        (f - 0.75).abs() <= 0.01,
    )
}

fn two_class_data(n0: usize, n1: usize) -> Dataset {
    let n = n0 + n1;
    let features = Matrix::from_vec(n, 1, (0..n).map(|i| i as f64).collect()).unwrap();
    let labels = (0..n).map(|i| usize::from(i >= n0)).collect();
    Dataset::new("two", features, labels, 2).unwrap()
}

pub fn cp_batch_two_classes() -> Check {
    let data = two_class_data(1000, 50);
    let mut bag = ConfusionPairBag::new(2);
    bag.record_batch(&[0, 0, 0, 1], &[1, 1, 1, 0]).unwrap();
    let mut r = seeded(7, 77);
    let pairs = build_cp_batch(&bag, &data.class_index(), DRAWS, &mut r).unwrap();
    let valid = pairs.iter().all(|p| {
        p.true_class != p.confused_class
            && data.label(p.true_row) == p.true_class
            && data.label(p.confused_row) == p.confused_class
    });
    let f = pairs.iter().filter(|p| p.true_class == 0).count() as f64 / DRAWS as f64;
    Check::new(
        "C=2 confusion-pair batch: pairs (0,1)/(1,0), true-class marginal 0.5 +- 0.01",
        f,
        valid && (f - 0.5).abs() <= 0.01,
    )
}

/// Chi-square statistic of the true-class marginal over ten classes, against
/// the 0.999 quantile with nine degrees of freedom.
pub fn cp_batch_marginal_chi_square() -> Check {
    let classes = 10;
    let rows: Vec<f64> = (0..200).map(|i| i as f64).collect();
    let labels: Vec<usize> = (0..200).map(|i| if i < 110 { 0 } else { 1 + (i - 110) % 9 }).collect();
    let data = Dataset::new("ten", Matrix::from_vec(200, 1, rows).unwrap(), labels, classes).unwrap();
    let mut bag = ConfusionPairBag::new(classes);
    bag.record_batch(&[0, 0, 0, 0, 3, 7], &[1, 1, 1, 4, 0, 2]).unwrap();
    let mut r = seeded(8, 77);
    let pairs = build_cp_batch(&bag, &data.class_index(), DRAWS, &mut r).unwrap();
    let mut freq = vec![0f64; classes];
    for p in &pairs {
        freq[p.true_class] += 1.0;
    }
    let expected = DRAWS as f64 / classes as f64;
    let chi2: f64 = freq.iter().map(|o| (o - expected).powi(2) / expected).sum();
    Check::new("true-class marginal chi-square (9 dof) < 27.88", chi2, chi2 < 27.88)
}

pub fn balanced_sampler_frequencies() -> Check {
    let data = two_class_data(1000, 50);
    let sampler = BalancedSampler::new(&data, seeded(9, 77)).unwrap();
    let minority = sampler.take(DRAWS).filter(|&i| data.label(i) == 1).count();
    let f = minority as f64 / DRAWS as f64;
    Check::new(
        "balanced sampler on (1000, 50): class frequency 0.5 +- 0.01",
        f,
        (f - 0.5).abs() <= 0.01,
    )
}

pub fn all() -> Vec<Check> {
    let mut checks = vec![beta_uniform_ks()];
    checks.extend(beta_means());
    checks.extend([
        beta_variance(),
        label_weight_mean(),
        empty_bag_is_uniform(),
        bag_frequency_weighting(),
        cp_batch_two_classes(),
        cp_batch_marginal_chi_square(),
        balanced_sampler_frequencies(),
    ]);
    checks
}
