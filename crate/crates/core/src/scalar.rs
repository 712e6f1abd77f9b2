//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display, LowerExp};

use nalgebra::RealField;
use num_traits::{FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Real scalar the simulator can run on (`f32` or `f64`).
///
/// Elementary functions (`sqrt`, `powf`, `exp`, ...) come from nalgebra's
/// `RealField`; constants and conversions from num-traits.
pub trait Real:
    RealField
    + Copy
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + FftNum
    + Default
    + Debug
    + Display
    + LowerExp
{
    /// Converts an `f64` literal into this scalar.
    #[inline]
    fn of(x: f64) -> Self {
        nalgebra::convert(x)
    }

    #[inline]
    fn of_usize(x: usize) -> Self {
        Self::of(x as f64)
    }

    /// Lossy conversion to `f64` for reporting.
    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// An absolute tolerance no tighter than this scalar can resolve.
    ///
    /// Returns `abs` for `f64`; for `f32` it is floored at `1024 * EPSILON`.
    #[inline]
    fn tolerance(abs: f64) -> Self {
        let floor = Self::default_epsilon() * Self::of(1024.0);
        RealField::max(Self::of(abs), floor)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Absolute value without the `Signed` / `ComplexField` method ambiguity.
#[inline]
pub fn abs<T: Real>(x: T) -> T {
    if x < T::zero() { -x } else { x }
}
