//! Scalar abstraction shared by the numerical modules.

use num_traits::{Float, FloatConst, NumAssignOps};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating point type the kernels are generic over (`f32` or `f64`).
pub trait Real:
    Float + FloatConst + NumAssignOps + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as num_traits::NumCast>::from(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize(n: usize) -> Self {
        <Self as num_traits::NumCast>::from(n).expect("usize representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `1/sqrt(r2 + b^2) - 1/sqrt(r2 + c^2)`, switching to the cancellation-free
/// form once `r` dominates both heights.
#[inline]
pub fn inv_sqrt_diff<T: Real>(r2: T, b: T, c: T) -> T {
    let sb = (r2 + b * b).sqrt();
    let sc = (r2 + c * c).sqrt();
    let h = b.abs().max(c.abs());
    if r2 > T::lit(100.0) * h * h {
        (c - b) * (c + b) / (sb * sc * (sb + sc))
    } else {
        T::one() / sb - T::one() / sc
    }
}
