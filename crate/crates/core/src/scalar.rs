//! Scalar abstraction shared by every numeric routine in the crate.

use nalgebra::RealField;
use num_traits::{FromPrimitive, NumCast, ToPrimitive};

/// Real floating-point element type (`f32` or `f64`).
///
/// Everything in the crate is generic over this trait. The nalgebra
/// `RealField` bound supplies the decompositions; num-traits supplies lossless
/// conversion at the I/O and configuration boundaries, which are always `f64`.
pub trait Scalar:
    RealField + Copy + FromPrimitive + ToPrimitive + NumCast + Default + Send + Sync + 'static
{
    /// Converts an `f64` constant into this scalar type.
    #[inline]
    fn lit(value: f64) -> Self {
        <Self as FromPrimitive>::from_f64(value).expect("f64 is representable in every Scalar")
    }

    /// Converts this value to `f64`.
    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).expect("Scalar values convert to f64")
    }

    /// Converts a count into this scalar type.
    #[inline]
    fn from_count(count: usize) -> Self {
        Self::lit(count as f64)
    }

    /// Unit roundoff for this type.
    fn epsilon() -> Self;

    /// Whether the value is neither infinite nor NaN.
    fn finite(self) -> bool;
}

impl Scalar for f64 {
    #[inline]
    fn epsilon() -> Self {
        f64::EPSILON
    }

    #[inline]
    fn finite(self) -> bool {
        self.is_finite()
    }
}

impl Scalar for f32 {
    #[inline]
    fn epsilon() -> Self {
        f32::EPSILON
    }

    #[inline]
    fn finite(self) -> bool {
        self.is_finite()
    }
}
