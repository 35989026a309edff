use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating-point element type used by every numeric routine in the crate.
///
/// Implemented for `f32` and `f64`. Hyperparameters and reported metrics stay
/// in `f64`; only parameters, features and per-sample arithmetic use `T`.
pub trait Scalar:
    Float + FromPrimitive + NumAssign + Sum + Debug + Display + FromStr + Default + Send + Sync + 'static
{
    /// Converts an `f64` constant into `Self`, rounding if necessary.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 is representable in every Scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("Scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
