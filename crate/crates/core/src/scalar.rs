//! Scalar abstraction for the numerical kernels.
//!
//! The quasi-dc solve and the thermal recursion are written once over
//! [`Scalar`] and instantiated for `f64` (the default everywhere) and `f32`.
//! Case data is always stored in `f64` and converted on entry.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type usable by the generic kernels.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts from `f64`, panicking only for values the type cannot hold
    /// at all (never the case for `f32`/`f64`, which saturate to infinity).
    fn of(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("scalar conversion from f64")
    }

    fn to_f64_lossy(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// Relative precision used for singularity checks in factorizations.
    fn tolerance() -> Self;
}

impl Scalar for f64 {
    fn tolerance() -> Self {
        1e-13
    }
}

impl Scalar for f32 {
    fn tolerance() -> Self {
        1e-6
    }
}
