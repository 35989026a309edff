use std::cell::Cell;
use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::ClassIndex;
use crate::error::{check_len, Error, Result};

/// How a confused class is drawn once a true class is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairSampling {
    /// Proportional to the multiplicity of `(c_t, c_m)`.
    #[default]
    Frequency,
    /// Uniform over the recorded `c_m` for `c_t`, ignoring multiplicities.
    UniformSupport,
}

/// Accumulated multiset of `(true class, predicted class)` misclassifications.
///
/// Multiplicities only ever grow. When a decay factor is set, a separate set of
/// real-valued sampling weights is kept and multiplied by the factor at every
/// [`end_epoch`](Self::end_epoch); the integer multiplicities are unaffected.
#[derive(Debug, Clone)]
pub struct ConfusionPairBag {
    num_classes: usize,
    multiplicity: BTreeMap<(usize, usize), u64>,
    per_true_total: Vec<u64>,
    total: u64,
    sampling: PairSampling,
    decay: Option<f64>,
    weights: Vec<f64>,
    draws: Cell<u64>,
}

impl ConfusionPairBag {
    pub fn new(num_classes: usize) -> Self {
        Self {
            num_classes,
            multiplicity: BTreeMap::new(),
            per_true_total: vec![0; num_classes],
            total: 0,
            sampling: PairSampling::Frequency,
            decay: None,
            weights: Vec::new(),
            draws: Cell::new(0),
        }
    }

    pub fn with_sampling(mut self, sampling: PairSampling) -> Self {
        self.sampling = sampling;
        self
    }

    /// Enables exponentially decayed sampling weights; `factor` in `(0, 1]`.
    pub fn with_decay(mut self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "bag_decay",
                reason: format!("{factor} is outside (0, 1]"),
            });
        }
        self.decay = Some(factor);
        self.weights = vec![0.0; self.num_classes * self.num_classes];
        for (&(t, m), &k) in &self.multiplicity {
            self.weights[t * self.num_classes + m] = k as f64;
        }
        Ok(self)
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn per_true_total(&self) -> &[u64] {
        &self.per_true_total
    }

    pub fn multiplicity(&self, truth: usize, pred: usize) -> u64 {
        self.multiplicity.get(&(truth, pred)).copied().unwrap_or(0)
    }

    pub fn pairs(&self) -> impl Iterator<Item = ((usize, usize), u64)> + '_ {
        self.multiplicity.iter().map(|(&k, &v)| (k, v))
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Number of confused classes drawn from this bag so far.
    pub fn draws(&self) -> u64 {
        self.draws.get()
    }

    /// Appends every misclassification of the batch.
    pub fn record_batch(&mut self, truths: &[usize], preds: &[usize]) -> Result<()> {
        check_len("predictions", truths.len(), preds.len())?;
        let n = self.num_classes;
        if let Some(&class) = truths.iter().chain(preds).find(|&&c| c >= n) {
            return Err(Error::ClassOutOfRange { class, num_classes: n });
        }
        for (&t, &p) in truths.iter().zip(preds) {
            if t == p {
                continue;
            }
            *self.multiplicity.entry((t, p)).or_insert(0) += 1;
            self.per_true_total[t] += 1;
            self.total += 1;
            if self.decay.is_some() {
                self.weights[t * n + p] += 1.0;
            }
        }
        Ok(())
    }

    pub fn end_epoch(&mut self) {
        if let Some(f) = self.decay {
            self.weights.iter_mut().for_each(|w| *w *= f);
        }
    }

    /// Draws a class confused with `truth`; uniform over the other classes
    /// when nothing has been recorded for `truth`.
    pub fn sample_confused_class<R: Rng + ?Sized>(&self, truth: usize, rng: &mut R) -> usize {
        self.draws.set(self.draws.get() + 1);
        let n = self.num_classes;
        if self.per_true_total[truth] > 0 {
            let support = self.multiplicity.range((truth, 0)..(truth + 1, 0));
            let weight = |m: usize, k: u64| -> f64 {
                match (self.decay, self.sampling) {
                    (_, PairSampling::UniformSupport) => 1.0,
                    (Some(_), PairSampling::Frequency) => self.weights[truth * n + m],
                    (None, PairSampling::Frequency) => k as f64,
                }
            };
            let entries: Vec<(usize, f64)> = support.map(|(&(_, m), &k)| (m, weight(m, k))).collect();
            let sum: f64 = entries.iter().map(|e| e.1).sum();
            if sum > 0.0 {
                let mut u = rng.random::<f64>() * sum;
                for &(m, w) in &entries {
                    if u < w {
                        return m;
                    }
                    u -= w;
                }
                return entries.last().unwrap().0;
            }
        }
        let k = rng.random_range(0..n - 1);
        if k >= truth {
            k + 1
        } else {
            k
        }
    }

    /// JSON object mapping `"t,m"` to multiplicities.
    pub fn to_json(&self) -> serde_json::Value {
        let map: serde_json::Map<String, serde_json::Value> = self
            .multiplicity
            .iter()
            .map(|(&(t, m), &k)| (format!("{t},{m}"), serde_json::Value::from(k)))
            .collect();
        serde_json::Value::Object(map)
    }

    pub fn from_json(num_classes: usize, value: &serde_json::Value) -> Result<Self> {
        let bad = |reason: String| Error::InvalidParameter { name: "bag", reason };
        let obj = value.as_object().ok_or_else(|| bad("expected a JSON object".into()))?;
        let mut bag = Self::new(num_classes);
        for (key, v) in obj {
            let (t, m) = key
                .split_once(',')
                .and_then(|(a, b)| Some((a.parse::<usize>().ok()?, b.parse::<usize>().ok()?)))
                .ok_or_else(|| bad(format!("key `{key}` is not `t,m`")))?;
            let k = v
                .as_u64()
                .ok_or_else(|| bad(format!("count for `{key}` is not an integer")))?;
            if t >= num_classes || m >= num_classes || t == m || k == 0 {
                return Err(bad(format!("invalid entry `{key}`: {k}")));
            }
            bag.multiplicity.insert((t, m), k);
            bag.per_true_total[t] += k;
            bag.total += k;
        }
        Ok(bag)
    }
}

/// One sampled pair: rows and classes of the true-class and confused-class samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CpPair {
    pub true_row: usize,
    pub true_class: usize,
    pub confused_row: usize,
    pub confused_class: usize,
}

/// `size` pairs: true classes uniform over all classes, confused classes from
/// the bag, rows uniform (with replacement) within each class.
pub fn build_cp_batch<R: Rng + ?Sized>(
    bag: &ConfusionPairBag,
    index: &ClassIndex,
    size: usize,
    rng: &mut R,
) -> Result<Vec<CpPair>> {
    check_len("class index", bag.num_classes(), index.num_classes())?;
    if size == 0 {
        return Ok(Vec::new());
    }
    index.ensure_nonempty()?;
    if bag.num_classes() < 2 {
        return Err(Error::InvalidParameter {
            name: "num_classes",
            reason: "confusion pairs need at least two classes".into(),
        });
    }
    let true_classes: Vec<usize> = (0..size).map(|_| rng.random_range(0..bag.num_classes())).collect();
    true_classes
        .into_iter()
        .map(|t| {
            let m = bag.sample_confused_class(t, rng);
            Ok(CpPair {
                true_row: index.sample(t, rng)?,
                true_class: t,
                confused_row: index.sample(m, rng)?,
                confused_class: m,
            })
        })
        .collect()
}
