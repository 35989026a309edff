#![allow(dead_code)]

pub mod stats;

use cpmix::confusion::{build_cp_batch, ConfusionPairBag};
use cpmix::data::LabeledDataset;
use cpmix::mixing::{cp_mix_pair, MixConfig};
use cpmix::nn::{backward, batch_loss, Loss, Matrix, MlpClassifier, SoftLabel};
use cpmix::rng::{seeded, RunRng};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> RunRng {
    seeded(seed, 99)
}

pub fn random_model(dims: &[usize], rng: &mut RunRng) -> MlpClassifier<f64> {
    let mut m = MlpClassifier::<f64>::glorot(dims, rng).unwrap();
    // Nonzero biases so every parameter has a generic gradient.
    let mut p = m.params_flat();
    for v in &mut p {
        *v += 0.1 * rng.sample::<f64, _>(StandardNormal);
    }
    m.set_params_flat(&p).unwrap();
    m
}

pub fn random_inputs(n: usize, dim: usize, rng: &mut RunRng) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..dim).map(|_| rng.sample(StandardNormal)).collect())
        .collect()
}

/// Every class present at least once, then uniform labels.
pub fn random_dataset(n: usize, dim: usize, classes: usize, rng: &mut RunRng) -> LabeledDataset<f64> {
    let rows = random_inputs(n, dim, rng);
    let labels: Vec<usize> = (0..n)
        .map(|i| if i < classes { i } else { rng.random_range(0..classes) })
        .collect();
    let features = Matrix::from_rows(&rows, dim).unwrap();
    LabeledDataset::new("random", features, labels, classes).unwrap()
}

pub fn random_soft_label(classes: usize, rng: &mut RunRng) -> SoftLabel<f64> {
    let raw: Vec<f64> = (0..classes).map(|_| rng.random::<f64>() + 0.01).collect();
    let sum: f64 = raw.iter().sum();
    SoftLabel::new(raw.into_iter().map(|v| v / sum).collect()).unwrap()
}

/// A CP-mixed batch from a bag filled with random misclassifications.
pub fn cp_mixed_batch(
    data: &LabeledDataset<f64>,
    size: usize,
    rng: &mut RunRng,
) -> (Vec<Vec<f64>>, Vec<SoftLabel<f64>>) {
    let c = data.num_classes();
    let mut bag = ConfusionPairBag::new(c);
    let truths: Vec<usize> = (0..50).map(|_| rng.random_range(0..c)).collect();
    let preds: Vec<usize> = truths
        .iter()
        .map(|&t| (t + 1 + rng.random_range(0..c - 1)) % c)
        .collect();
    bag.record_batch(&truths, &preds).unwrap();
    let pairs = build_cp_batch(&bag, &data.class_index(), size, rng).unwrap();
    let config = MixConfig::default();
    pairs
        .iter()
        .map(|p| {
            let m = cp_mix_pair(
                (data.row(p.true_row), p.true_class),
                (data.row(p.confused_row), p.confused_class),
                data.class_counts(),
                &config,
                rng,
            )
            .unwrap();
            (m.x_mix, m.y_mix)
        })
        .unzip()
}

/// Below this magnitude gradients are compared absolutely: the difference
/// quotient with `h = 1e-6` carries roundoff near `1e-10`.
pub const FD_FLOOR: f64 = 1e-4;

/// Worst relative error between analytic and central-difference gradients
/// over `coords` random parameter coordinates.
pub fn max_fd_error(
    model: &MlpClassifier<f64>,
    inputs: &[Vec<f64>],
    targets: &[SoftLabel<f64>],
    loss: &Loss<f64>,
    coords: usize,
    rng: &mut RunRng,
) -> f64 {
    let (_, grads) = backward(model, inputs, targets, loss).unwrap();
    let analytic = grads.flat();
    let base = model.params_flat();
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..coords {
        let k = rng.random_range(0..base.len());
        let eval = |delta: f64| {
            let mut p = base.clone();
            p[k] += delta;
            let mut m = model.clone();
            m.set_params_flat(&p).unwrap();
            batch_loss(&m, inputs, targets, loss).unwrap()
        };
        let numeric = (eval(h) - eval(-h)) / (2.0 * h);
        let err = (analytic[k] - numeric).abs() / (analytic[k].abs() + numeric.abs()).max(FD_FLOOR);
        worst = worst.max(err);
    }
    worst
}
