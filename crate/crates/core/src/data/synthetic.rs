use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::nn::Matrix;
use crate::rng::{seeded, stream};
use crate::scalar::Scalar;

/// Four isotropic Gaussians in the plane: two majority classes at `(0, 1)` and
/// `(1, 0)`, two minority classes at `(0, -1)` and `(-1, 0)`.
///
/// Class ids follow the center order, so classes 0 and 1 are the majorities.
/// Minority 2 borders majority 1 and minority 3 borders majority 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToySpec {
    pub centers: Vec<[f64; 2]>,
    pub std: f64,
    pub n_majority: usize,
    pub n_minority: usize,
    pub n_test_per_class: usize,
}

impl Default for ToySpec {
    fn default() -> Self {
        Self {
            centers: vec![[0.0, 1.0], [1.0, 0.0], [0.0, -1.0], [-1.0, 0.0]],
            std: 0.4,
            n_majority: 1000,
            n_minority: 50,
            n_test_per_class: 1000,
        }
    }
}

impl ToySpec {
    pub const MAJORITY: [usize; 2] = [0, 1];
    pub const MINORITY: [usize; 2] = [2, 3];
    /// `(minority, adjacent majority)` pairs whose confusions the toy tracks.
    pub const ADJACENT_PAIRS: [(usize, usize); 2] = [(2, 1), (3, 0)];

    /// Default geometry with `n_minority = round(n_majority / rho)`.
    pub fn with_rho(rho: f64) -> Self {
        let base = Self::default();
        let n_minority = ((base.n_majority as f64 / rho).round() as usize).max(1);
        Self { n_minority, ..base }
    }

    pub fn imbalance_factor(&self) -> f64 {
        self.n_majority as f64 / self.n_minority as f64
    }

    fn train_count(&self, class: usize) -> usize {
        if Self::MAJORITY.contains(&class) {
            self.n_majority
        } else {
            self.n_minority
        }
    }
}

fn gaussian_rows<T: Scalar, R: Rng>(center: &[f64], std: f64, n: usize, rng: &mut R, out: &mut Vec<T>) {
    for _ in 0..n {
        for &c in center {
            let z: f64 = rng.sample(StandardNormal);
            out.push(T::lit(c + std * z));
        }
    }
}

fn gaussian_classes<T: Scalar, R: Rng>(
    name: &str,
    centers: &[Vec<f64>],
    std: f64,
    count: impl Fn(usize) -> usize,
    rng: &mut R,
) -> Result<LabeledDataset<T>> {
    let dim = centers.first().map_or(0, Vec::len);
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for (c, center) in centers.iter().enumerate() {
        let n = count(c);
        gaussian_rows(center, std, n, rng, &mut data);
        labels.extend(std::iter::repeat_n(c, n));
    }
    let features = Matrix::from_vec(labels.len(), dim, data)?;
    LabeledDataset::new(name, features, labels, centers.len())
}

fn check_std(std: f64) -> Result<()> {
    if std >= 0.0 && std.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "std",
            reason: format!("{std} is not a finite nonnegative number"),
        })
    }
}

/// Imbalanced training set and balanced test set of the four-class toy.
pub fn make_toy<T: Scalar>(spec: &ToySpec, seed: u64) -> Result<(LabeledDataset<T>, LabeledDataset<T>)> {
    check_std(spec.std)?;
    if spec.centers.len() != 4 {
        return Err(Error::InvalidParameter {
            name: "centers",
            reason: "toy needs exactly four centers".into(),
        });
    }
    let centers: Vec<Vec<f64>> = spec.centers.iter().map(|c| c.to_vec()).collect();
    let mut rng = seeded(seed, stream::TRAIN_DATA);
    let name = format!("toy-rho{}", spec.imbalance_factor());
    let train = gaussian_classes(&name, &centers, spec.std, |c| spec.train_count(c), &mut rng)?;
    let mut rng = seeded(seed, stream::TEST_DATA);
    let test = gaussian_classes(
        &format!("{name}-test"),
        &centers,
        spec.std,
        |_| spec.n_test_per_class,
        &mut rng,
    )?;
    Ok((train, test))
}

/// Gaussian clusters on a closed curve in `dim` dimensions.
///
/// The curve is the trigonometric ring `radius / sqrt(H) * (cos θ, sin θ,
/// cos 2θ, sin 2θ, ..., cos Hθ, sin Hθ)` with `H = harmonics`, occupying the
/// first `2H` coordinates; any remaining coordinates carry noise only. With
/// `H = 1` this is a plain circle. Higher harmonics bend the ring so that the
/// chord between two classes does not pass through a third one.
///
/// Class `c` sits at ring slot `(c * slot_stride) mod C`, so with a stride
/// coprime to `C` frequent and rare classes end up as neighbours once the
/// training set is made long-tailed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobsSpec {
    pub num_classes: usize,
    pub dim: usize,
    pub per_class: usize,
    pub test_per_class: usize,
    pub radius: f64,
    pub std: f64,
    pub harmonics: usize,
    pub slot_stride: usize,
}

impl Default for BlobsSpec {
    fn default() -> Self {
        Self {
            num_classes: 20,
            dim: 10,
            per_class: 500,
            test_per_class: 100,
            radius: 3.0,
            std: 1.0,
            harmonics: 5,
            slot_stride: 7,
        }
    }
}

impl BlobsSpec {
    pub fn centers(&self) -> Vec<Vec<f64>> {
        let c = self.num_classes as f64;
        (0..self.num_classes)
            .map(|k| {
                let slot = (k * self.slot_stride) % self.num_classes;
                let theta = 2.0 * std::f64::consts::PI * slot as f64 / c;
                let scale = self.radius / (self.harmonics as f64).sqrt();
                let mut center = vec![0.0; self.dim];
                for h in 0..self.harmonics {
                    let angle = (h + 1) as f64 * theta;
                    center[2 * h] = scale * angle.cos();
                    center[2 * h + 1] = scale * angle.sin();
                }
                center
            })
            .collect()
    }
}

/// Balanced training and test sets of the ring-of-blobs benchmark.
pub fn make_blobs<T: Scalar>(spec: &BlobsSpec, seed: u64) -> Result<(LabeledDataset<T>, LabeledDataset<T>)> {
    check_std(spec.std)?;
    if spec.harmonics == 0 || spec.dim < 2 * spec.harmonics || spec.num_classes < 2 {
        return Err(Error::InvalidParameter {
            name: "blobs",
            reason: "need at least one harmonic, dim >= 2 * harmonics and two classes".into(),
        });
    }
    let centers = spec.centers();
    let mut rng = seeded(seed, stream::TRAIN_DATA);
    let train = gaussian_classes("blobs", &centers, spec.std, |_| spec.per_class, &mut rng)?;
    let mut rng = seeded(seed, stream::TEST_DATA);
    let test = gaussian_classes("blobs-test", &centers, spec.std, |_| spec.test_per_class, &mut rng)?;
    Ok((train, test))
}
