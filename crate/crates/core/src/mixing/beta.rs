//! Gamma and symmetric Beta variates.
//!
//! Gamma draws use the Marsaglia–Tsang squeeze/rejection scheme; shapes below
//! one are boosted to `alpha + 1` and corrected by `U^(1/alpha)`. Everything
//! is carried in log space so that tiny shapes, whose variates underflow,
//! still produce a well-defined Beta ratio.

use rand::Rng;
use rand_distr::{Open01, StandardNormal};

use crate::error::{Error, Result};

/// Logarithm of a `Gamma(shape, 1)` variate.
pub fn ln_gamma_variate<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape < 1.0 {
        let u: f64 = rng.sample(Open01);
        return ln_gamma_variate(shape + 1.0, rng) + u.ln() / shape;
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x: f64 = rng.sample(StandardNormal);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u: f64 = rng.sample(Open01);
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d.ln() + v.ln();
        }
    }
}

pub fn gamma_variate<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    ln_gamma_variate(shape, rng).exp()
}

/// Draw from `Beta(alpha, alpha)` as `g1 / (g1 + g2)` with independent
/// `Gamma(alpha)` variates.
pub fn sample_lambda<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            reason: format!("Beta parameter {alpha} must be positive and finite"),
        });
    }
    let a = ln_gamma_variate(alpha, rng);
    let b = ln_gamma_variate(alpha, rng);
    // g1 / (g1 + g2) = 1 / (1 + exp(ln g2 - ln g1))
    Ok((1.0 / (1.0 + (b - a).exp())).clamp(0.0, 1.0))
}
