//! Scalar bound shared by every numeric module.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal. Lossy for `f32`, never fails.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in every Scalar")
    }

    /// Converts a count or index.
    #[inline]
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("u64 representable in every Scalar")
    }

    /// Lossless widening used in error payloads and reports.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Largest `x` for which `exp(x)` is still finite.
    #[inline]
    fn max_ln() -> Self {
        Self::max_value().ln()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Relative difference `|a - b| / max(|a|, |b|)`; zero when both vanish.
pub fn rel_diff<T: Scalar>(a: T, b: T) -> T {
    if a == b {
        return T::zero();
    }
    let scale = a.abs().max(b.abs());
    (a - b).abs() / scale
}

/// `log(exp(a) + exp(b))` without overflow.
pub fn log_add_exp<T: Scalar>(a: T, b: T) -> T {
    if a == T::neg_infinity() {
        return b;
    }
    if b == T::neg_infinity() {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}
