//! Scalar abstraction: the whole engine is generic over the floating-point
//! type through this trait, with `f64` as the default concretion.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating-point scalar usable by the tensor engine: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + Sum + Debug + Display + LowerExp + 'static
{
    /// Convert an `f64` constant (rounds for narrower types).
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 constant")
    }

    /// Convert a count or dimension into the scalar type.
    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("dimension fits in scalar")
    }

    #[inline]
    fn half() -> Self {
        Self::of(0.5)
    }

    #[inline]
    fn two() -> Self {
        Self::of(2.0)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Scaled closeness measure used by every identity check: `|a - b| / (1 + max(|a|, |b|))`.
pub fn scaled_error<T: Real>(a: T, b: T) -> T {
    (a - b).abs() / (T::one() + a.abs().max(b.abs()))
}

/// Max scaled error over two component slices (must be equal length).
pub fn scaled_error_slice<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let scale = T::one()
        + a.iter()
            .chain(b.iter())
            .fold(T::zero(), |m, x| m.max(x.abs()));
    a.iter()
        .zip(b.iter())
        .fold(T::zero(), |m, (&x, &y)| m.max((x - y).abs()))
        / scale
}
