//! Mini-batch training: plain ERM, vanilla mixup, the two-stage confusion-pair
//! regimen, and class-balanced fine-tuning of the output layer.
//!
//! Every run draws shuffles and mixing randomness from separate seeded
//! streams, so turning a regularizer off leaves the batch order untouched.

mod log;
mod schedule;

use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

pub use log::{EpochRecord, TrainLog};
pub use schedule::{FinetuneConfig, LrSchedule, OptimizerConfig, TrainSchedule};

use crate::confusion::{build_cp_batch, confusion_matrix, ConfusionMatrix, ConfusionPairBag, PairSampling};
use crate::data::{BalancedSampler, LabeledDataset};
use crate::error::{check_len, Error, Result};
use crate::mixing::{
    cp_mix_pair, cp_mix_with_lambda, permutation_pairs, sample_lambda, vanilla_mix_pair, MixConfig, MixedExample,
};
use crate::nn::{
    accumulate_gradients, BatchPass, Gradients, Loss, MlpClassifier, OptimizerKind, OptimizerState, SoftLabel,
};
use crate::report::{evaluate, SubgroupThresholds};
use crate::rng::{seeded, stream, RunRng};
use crate::scalar::Scalar;

/// Loss applied to clean samples by ERM training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErmLoss {
    CrossEntropy,
    BalancedSoftmax,
}

/// Switches of the confusion-pair regimen beyond [`MixConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpMixOptions {
    pub sampling: PairSampling,
    /// Exponential decay of bag sampling weights per epoch; `None` keeps the plain accumulation.
    pub bag_decay: Option<f64>,
    /// Keep appending misclassifications after the regularizers switch on.
    pub record_in_stage2: bool,
    /// Use the count-aware label weight for the in-batch mixup term too.
    pub label_aware_mix_reg: bool,
}

impl Default for CpMixOptions {
    fn default() -> Self {
        Self {
            sampling: PairSampling::Frequency,
            bag_decay: None,
            record_in_stage2: true,
            label_aware_mix_reg: false,
        }
    }
}

/// A weighted mean-loss term over owned examples.
#[derive(Debug, Clone)]
pub struct LossTerm<T> {
    pub inputs: Vec<Vec<T>>,
    pub targets: Vec<SoftLabel<T>>,
    pub loss: Loss<T>,
    pub weight: f64,
}

/// Gradient of `sum_k weight_k * L_k`, accumulated term by term in order.
pub fn composite_gradients<T: Scalar>(
    model: &MlpClassifier<T>,
    terms: &[LossTerm<T>],
) -> Result<(Vec<BatchPass<T>>, Gradients<T>)> {
    let mut grads = Gradients::zeros_like(model);
    let passes = terms
        .iter()
        .map(|term| {
            accumulate_gradients(
                model,
                &term.inputs,
                &term.targets,
                &term.loss,
                T::lit(term.weight),
                &mut grads,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((passes, grads))
}

enum Regimen<'a> {
    Erm(ErmLoss),
    Mixup {
        alpha: f64,
    },
    CpMix {
        config: &'a MixConfig,
        options: &'a CpMixOptions,
        bag: &'a mut ConfusionPairBag,
    },
}

fn one_hot_targets<T: Scalar>(labels: &[usize], num_classes: usize) -> Result<Vec<SoftLabel<T>>> {
    labels.iter().map(|&y| SoftLabel::one_hot(y, num_classes)).collect()
}

fn split<T: Scalar>(examples: Vec<MixedExample<T>>) -> (Vec<Vec<T>>, Vec<SoftLabel<T>>) {
    examples.into_iter().map(|m| (m.x_mix, m.y_mix)).unzip()
}

fn erm_loss<T: Scalar>(kind: ErmLoss, counts: &[usize]) -> Result<Loss<T>> {
    match kind {
        ErmLoss::CrossEntropy => Ok(Loss::CrossEntropy),
        ErmLoss::BalancedSoftmax => Loss::balanced_softmax(counts),
    }
}

fn check_finite<T: Scalar>(term: &'static str, value: T, epoch: usize, batch: usize) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::Diverged {
            epoch,
            batch,
            term,
            value: value.as_f64(),
        })
    }
}

#[derive(Default)]
struct EpochSums {
    erm: f64,
    erm_batches: usize,
    cp: f64,
    cp_batches: usize,
    mix: f64,
    mix_batches: usize,
    misclassified: u64,
}

fn mean(sum: f64, n: usize) -> Option<f64> {
    (n > 0).then(|| sum / n as f64)
}

fn run<T: Scalar>(
    model: &mut MlpClassifier<T>,
    train: &LabeledDataset<T>,
    test: &LabeledDataset<T>,
    schedule: &TrainSchedule,
    mut regimen: Regimen<'_>,
) -> Result<TrainLog> {
    schedule.validate()?;
    check_len("model input", train.dim(), model.input_dim())?;
    check_len("model classes", train.num_classes(), model.num_classes())?;
    check_len("test input", train.dim(), test.dim())?;
    check_len("test classes", train.num_classes(), test.num_classes())?;
    if train.is_empty() {
        return Err(Error::InvalidParameter {
            name: "train",
            reason: "training set is empty".into(),
        });
    }
    let started = Instant::now();
    let num_classes = train.num_classes();
    let counts = train.class_counts();
    let index = train.class_index();
    let erm = match &regimen {
        Regimen::Erm(kind) => erm_loss(*kind, counts)?,
        Regimen::Mixup { .. } => Loss::CrossEntropy,
        Regimen::CpMix { .. } => Loss::balanced_softmax(counts)?,
    };
    if let Regimen::CpMix { config, .. } = &regimen {
        config.validate()?;
        if schedule.cp_start_epoch < schedule.epochs && config.gamma_cp > 0.0 {
            index.ensure_nonempty()?;
        }
    }

    let mut opt = OptimizerState::new(
        schedule.optimizer.kind,
        schedule.optimizer.learning_rate,
        schedule.optimizer.weight_decay,
        model,
    )?;
    let mut shuffle_rng = seeded(schedule.seed, stream::SHUFFLE);
    let mut mix_rng = seeded(schedule.seed, stream::MIX);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut log = TrainLog::default();

    for epoch in 1..=schedule.epochs {
        let lr = schedule.optimizer.learning_rate * schedule.lr_schedule.factor(epoch, schedule.epochs);
        opt.set_learning_rate(lr);
        order.shuffle(&mut shuffle_rng);
        let mut sums = EpochSums::default();
        let draws_before = match &regimen {
            Regimen::CpMix { bag, .. } => bag.draws(),
            _ => 0,
        };

        for (b, rows) in order.chunks(schedule.batch_size).enumerate() {
            let xs: Vec<Vec<T>> = rows.iter().map(|&i| train.row(i).to_vec()).collect();
            let ys: Vec<usize> = rows.iter().map(|&i| train.label(i)).collect();
            let mut terms = Vec::with_capacity(3);
            match &mut regimen {
                Regimen::Erm(_) => terms.push(LossTerm {
                    inputs: xs,
                    targets: one_hot_targets(&ys, num_classes)?,
                    loss: erm.clone(),
                    weight: 1.0,
                }),
                Regimen::Mixup { alpha } => {
                    let mixed = permutation_pairs(rows.len(), &mut mix_rng)
                        .into_iter()
                        .map(|(i, j)| {
                            vanilla_mix_pair(
                                (&xs[i][..], ys[i]),
                                (&xs[j][..], ys[j]),
                                num_classes,
                                *alpha,
                                &mut mix_rng,
                            )
                        })
                        .collect::<Result<Vec<_>>>()?;
                    // clean-sample predictions only feed the accuracy statistics
                    for (x, &y) in xs.iter().zip(&ys) {
                        if model.predict(x)? != y {
                            sums.misclassified += 1;
                        }
                    }
                    let (inputs, targets) = split(mixed);
                    terms.push(LossTerm {
                        inputs,
                        targets,
                        loss: Loss::CrossEntropy,
                        weight: 1.0,
                    });
                }
                Regimen::CpMix { config, options, bag } => {
                    let stage2 = epoch > schedule.cp_start_epoch;
                    let targets = one_hot_targets(&ys, num_classes)?;
                    if stage2 && config.gamma_cp > 0.0 {
                        let pairs = build_cp_batch(bag, &index, schedule.mix_batch_size, &mut mix_rng)?;
                        let mixed = pairs
                            .iter()
                            .map(|p| {
                                cp_mix_pair(
                                    (train.row(p.true_row), p.true_class),
                                    (train.row(p.confused_row), p.confused_class),
                                    counts,
                                    config,
                                    &mut mix_rng,
                                )
                            })
                            .collect::<Result<Vec<_>>>()?;
                        let (inputs, targets) = split(mixed);
                        terms.push(LossTerm {
                            inputs,
                            targets,
                            loss: Loss::CrossEntropy,
                            weight: config.gamma_cp,
                        });
                    }
                    if stage2 && config.gamma_mix > 0.0 {
                        let mixed = permutation_pairs(rows.len(), &mut mix_rng)
                            .into_iter()
                            .map(|(i, j)| {
                                let first = (&xs[i][..], ys[i]);
                                let second = (&xs[j][..], ys[j]);
                                if options.label_aware_mix_reg {
                                    let lambda = sample_lambda(config.alpha, &mut mix_rng)?;
                                    cp_mix_with_lambda(first, second, counts, config.t, lambda)
                                } else {
                                    vanilla_mix_pair(first, second, num_classes, config.alpha, &mut mix_rng)
                                }
                            })
                            .collect::<Result<Vec<_>>>()?;
                        let (inputs, targets) = split(mixed);
                        terms.push(LossTerm {
                            inputs,
                            targets,
                            loss: Loss::CrossEntropy,
                            weight: config.gamma_mix,
                        });
                    }
                    // ERM first so the accumulation order is fixed at (ERM, CP, mix)
                    terms.insert(
                        0,
                        LossTerm {
                            inputs: xs,
                            targets,
                            loss: erm.clone(),
                            weight: 1.0,
                        },
                    );
                }
            }

            let (passes, grads) = composite_gradients(model, &terms).map_err(|e| match e {
                Error::NonFinite(term) => Error::Diverged {
                    epoch,
                    batch: b,
                    term,
                    value: f64::NAN,
                },
                e => e,
            })?;
            let first = &passes[0];
            let erm_name = if matches!(regimen, Regimen::Mixup { .. }) {
                "mixup"
            } else {
                "erm"
            };
            check_finite(erm_name, first.mean_loss, epoch, b)?;
            sums.erm += first.mean_loss.as_f64();
            sums.erm_batches += 1;

            if let Regimen::CpMix { config, options, bag } = &mut regimen {
                if epoch <= schedule.cp_start_epoch || options.record_in_stage2 {
                    bag.record_batch(&ys, &first.predictions)?;
                }
                let mut rest = passes[1..].iter();
                let stage2 = epoch > schedule.cp_start_epoch;
                if stage2 && config.gamma_cp > 0.0 {
                    let p = rest.next().expect("cp term present");
                    check_finite("cp", p.mean_loss, epoch, b)?;
                    sums.cp += p.mean_loss.as_f64();
                    sums.cp_batches += 1;
                }
                if stage2 && config.gamma_mix > 0.0 {
                    let p = rest.next().expect("mix term present");
                    check_finite("mix", p.mean_loss, epoch, b)?;
                    sums.mix += p.mean_loss.as_f64();
                    sums.mix_batches += 1;
                }
            }
            if !matches!(regimen, Regimen::Mixup { .. }) {
                sums.misclassified += ys.iter().zip(&first.predictions).filter(|(y, p)| y != p).count() as u64;
            }

            opt.step(model, &grads)?;
        }

        let (bag_total, cp_draws) = match &mut regimen {
            Regimen::CpMix { bag, .. } => {
                bag.end_epoch();
                (bag.total(), bag.draws() - draws_before)
            }
            _ => (0, 0),
        };
        let report = evaluate(model, test, counts, SubgroupThresholds::default(), None)?;
        log.records.push(EpochRecord {
            epoch,
            learning_rate: lr,
            loss_erm: sums.erm / sums.erm_batches as f64,
            loss_cp: mean(sums.cp, sums.cp_batches),
            loss_mix: mean(sums.mix, sums.mix_batches),
            train_acc: 1.0 - sums.misclassified as f64 / train.len() as f64,
            misclassified: sums.misclassified,
            bag_total,
            cp_draws,
            test_top1: report.top1,
            test_many: report.subgroup_acc.many,
            test_medium: report.subgroup_acc.medium,
            test_few: report.subgroup_acc.few,
        });
    }
    log.wall_time_secs = started.elapsed().as_secs_f64();
    Ok(log)
}

/// Plain empirical risk minimization; returns the test confusion matrix too.
pub fn train_erm<T: Scalar>(
    mut model: MlpClassifier<T>,
    train: &LabeledDataset<T>,
    test: &LabeledDataset<T>,
    schedule: &TrainSchedule,
    loss: ErmLoss,
) -> Result<(MlpClassifier<T>, ConfusionMatrix, TrainLog)> {
    let log = run(&mut model, train, test, schedule, Regimen::Erm(loss))?;
    let confusion = confusion_matrix(&model, test)?;
    Ok((model, confusion, log))
}

/// Every batch replaced by its permutation-paired mixup; cross-entropy on soft labels.
pub fn train_vanilla_mixup<T: Scalar>(
    mut model: MlpClassifier<T>,
    train: &LabeledDataset<T>,
    test: &LabeledDataset<T>,
    schedule: &TrainSchedule,
    alpha: f64,
) -> Result<(MlpClassifier<T>, TrainLog)> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            reason: format!("{alpha} must be positive"),
        });
    }
    let log = run(&mut model, train, test, schedule, Regimen::Mixup { alpha })?;
    Ok((model, log))
}

/// Two-stage confusion-pair mixup with default bag behaviour.
pub fn train_cpmix<T: Scalar>(
    model: MlpClassifier<T>,
    train: &LabeledDataset<T>,
    test: &LabeledDataset<T>,
    schedule: &TrainSchedule,
    mix: &MixConfig,
) -> Result<(MlpClassifier<T>, ConfusionPairBag, TrainLog)> {
    train_cpmix_with(model, train, test, schedule, mix, &CpMixOptions::default())
}

/// Balanced-softmax ERM on every batch; misclassifications feed the bag; after
/// `cp_start_epoch` the confusion-pair and in-batch mixup terms are added with
/// weights `gamma_cp` and `gamma_mix`.
pub fn train_cpmix_with<T: Scalar>(
    mut model: MlpClassifier<T>,
    train: &LabeledDataset<T>,
    test: &LabeledDataset<T>,
    schedule: &TrainSchedule,
    mix: &MixConfig,
    options: &CpMixOptions,
) -> Result<(MlpClassifier<T>, ConfusionPairBag, TrainLog)> {
    let mut bag = ConfusionPairBag::new(train.num_classes()).with_sampling(options.sampling);
    if let Some(f) = options.bag_decay {
        bag = bag.with_decay(f)?;
    }
    let log = run(
        &mut model,
        train,
        test,
        schedule,
        Regimen::CpMix {
            config: mix,
            options,
            bag: &mut bag,
        },
    )?;
    Ok((model, bag, log))
}

/// Retrains only the output layer on class-balanced batches with SGD and
/// cross-entropy; `epochs * ceil(N / B)` steps.
pub fn finetune_classifier<T: Scalar>(
    mut model: MlpClassifier<T>,
    train: &LabeledDataset<T>,
    schedule: &TrainSchedule,
    seed: u64,
) -> Result<MlpClassifier<T>> {
    let ft = schedule.finetune;
    if !ft.enabled || ft.epochs == 0 {
        return Ok(model);
    }
    check_len("model input", train.dim(), model.input_dim())?;
    check_len("model classes", train.num_classes(), model.num_classes())?;
    let mut opt = OptimizerState::new(
        OptimizerKind::SgdMomentum { momentum: ft.momentum },
        ft.learning_rate,
        ft.weight_decay,
        &model,
    )?;
    let rng: RunRng = seeded(seed, stream::FINETUNE);
    let mut sampler = BalancedSampler::new(train, rng)?;
    let steps = train.len().div_ceil(schedule.batch_size);
    let last = model.layers().len() - 1;
    for _ in 0..ft.epochs {
        for _ in 0..steps {
            let rows: Vec<usize> = sampler.by_ref().take(schedule.batch_size).collect();
            let xs: Vec<&[T]> = rows.iter().map(|&i| train.row(i)).collect();
            let ys = one_hot_targets(
                &rows.iter().map(|&i| train.label(i)).collect::<Vec<_>>(),
                train.num_classes(),
            )?;
            let mut grads = Gradients::zeros_like(&model);
            let pass = accumulate_gradients(&model, &xs, &ys, &Loss::CrossEntropy, T::one(), &mut grads)?;
            if !pass.mean_loss.is_finite() {
                return Err(Error::NonFinite("finetune loss"));
            }
            opt.step_layers(&mut model, &grads, last..last + 1)?;
        }
    }
    Ok(model)
}
