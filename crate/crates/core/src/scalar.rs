//! Floating point abstraction shared by the closed-form kernels.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point type the closed-form maps are generic over (`f32` or `f64`).
pub trait Scalar:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Every `f64` is representable (possibly rounded).
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Widens to `f64`.
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// Reduces `x` into `[0, 2π)`.
    #[inline]
    fn wrap_tau(self) -> Self {
        let two_pi = Self::TAU();
        let r = self % two_pi;
        if r < Self::zero() {
            r + two_pi
        } else {
            r
        }
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
