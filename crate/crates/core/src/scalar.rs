//! Scalar abstraction: every quantity measured in meters, seconds or radians
//! is generic over [`Real`], so the whole stack runs on `f32` or `f64`.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating-point scalar used for all world-space math.
pub trait Real:
    Float + FloatConst + NumAssign + FromPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Lift an `f64` constant into the scalar type.
    #[inline]
    fn val(x: f64) -> Self {
        Self::from_f64(x).expect("constant representable in scalar type")
    }

    /// Lift a cell or element count into the scalar type.
    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn two() -> Self {
        Self::one() + Self::one()
    }

    #[inline]
    fn half() -> Self {
        Self::val(0.5)
    }
}

impl<T> Real for T where
    T: Float + FloatConst + NumAssign + FromPrimitive + Debug + Display + Send + Sync + 'static
{
}
