//! Scalar abstraction for the floating-point lane.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::float::FloatConst;
use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar the geometry is generic over: `f32` or `f64`.
///
/// The trait is a bound alias; every `num_traits::Float` with primitive
/// conversions qualifies automatically.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Shorthand for lossy conversion from `f64` literals.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to any Float")
    }

    /// Shorthand for conversion from a count.
    #[inline]
    fn of_usize(x: usize) -> Self {
        Self::from_usize(x).expect("usize converts to any Float")
    }

    /// Lossy view as `f64` (used for reporting only).
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Float converts to f64")
    }
}

impl<T> Scalar for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + Sum
        + Debug
        + Display
        + LowerExp
        + Send
        + Sync
        + 'static
{
}
