use rand::seq::SliceRandom;

use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::rng::{seeded, stream};
use crate::scalar::Scalar;

/// Per-class targets `ceil(n_0 * mu^i)` with `mu = rho^(-1/(C-1))`.
pub fn long_tail_counts(head: usize, num_classes: usize, rho: f64) -> Result<Vec<usize>> {
    if !(rho >= 1.0 && rho.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "rho",
            reason: format!("imbalance factor {rho} must be a finite number >= 1"),
        });
    }
    let tail = head as f64 / rho;
    if tail < 1.0 {
        return Err(Error::InfeasibleImbalance { rho, head, tail });
    }
    if num_classes <= 1 {
        return Ok(vec![head; num_classes]);
    }
    let mu = rho.powf(-1.0 / (num_classes - 1) as f64);
    Ok((0..num_classes)
        .map(|i| {
            let exact = head as f64 * mu.powi(i as i32);
            // Absorb powf rounding so exact integers are not bumped up by one.
            ((exact - 1e-9 * exact.max(1.0)).ceil() as usize).clamp(1, head)
        })
        .collect())
}

/// Long-tailed subsample of a balanced dataset.
///
/// Class `i` keeps `ceil(n_0 * mu^i)` rows chosen uniformly without
/// replacement; `n_0` is the smallest class count of `base`. Kept rows retain
/// their original order.
pub fn exponential_imbalance<T: Scalar>(base: &LabeledDataset<T>, rho: f64, seed: u64) -> Result<LabeledDataset<T>> {
    let index = base.class_index();
    index.ensure_nonempty()?;
    let head = base.class_counts().iter().copied().min().unwrap_or(0);
    let targets = long_tail_counts(head, base.num_classes(), rho)?;
    let mut rng = seeded(seed, stream::IMBALANCE);
    let mut keep = Vec::with_capacity(targets.iter().sum());
    for (c, &n) in targets.iter().enumerate() {
        let mut rows = index.rows(c).to_vec();
        rows.shuffle(&mut rng);
        keep.extend_from_slice(&rows[..n]);
    }
    keep.sort_unstable();
    let name = format!("{}-lt{}", base.name(), rho);
    Ok(base.subset(&keep).with_name(name))
}
