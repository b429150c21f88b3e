//! Scalar abstraction shared by every solver and measurement.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type the grids, solvers and measurements are generic over.
///
/// Implemented for `f32` and `f64`. Tolerances in the default configurations
/// are tuned for `f64`; `f32` callers should loosen them.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal, panicking only if the value is not representable at all.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Lossy conversion used for reports and serialization.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[inline]
pub(crate) fn hypot<T: Real>(x: T, y: T) -> T {
    (x * x + y * y).sqrt()
}

#[inline]
pub(crate) fn norm2<T: Real>(v: [T; 2]) -> T {
    hypot(v[0], v[1])
}
