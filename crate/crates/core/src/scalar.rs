//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real floating point type the physics is written against: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + Debug
    + Display
    + Default
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    /// Lossy view as `f64`, for diagnostics and serialization boundaries.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `|a - b| <= rel * max(|a|, |b|) + abs`.
pub fn close<T: Real>(a: T, b: T, rel: T, abs: T) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) + abs
}

/// `a * b - c * d` with a single rounding error in the result (Kahan's
/// algorithm on fused multiply-add).
pub fn diff_of_products<T: Real>(a: T, b: T, c: T, d: T) -> T {
    let w = c * d;
    let err = (-c).mul_add(d, w);
    a.mul_add(b, -w) + err
}

/// Unevaluated sum `hi + lo` carrying roughly twice the working precision.
/// Only what the discriminant needs is implemented.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Compensated<T> {
    hi: T,
    lo: T,
}

impl<T: Real> Compensated<T> {
    pub(crate) fn new(v: T) -> Self {
        Self {
            hi: v,
            lo: T::zero(),
        }
    }

    pub(crate) fn value(self) -> T {
        self.hi + self.lo
    }

    fn two_sum(a: T, b: T) -> Self {
        let s = a + b;
        let bb = s - a;
        let lo = (a - (s - bb)) + (b - bb);
        Self { hi: s, lo }
    }

    pub(crate) fn add(self, o: Self) -> Self {
        let s = Self::two_sum(self.hi, o.hi);
        let lo = s.lo + self.lo + o.lo;
        Self::two_sum(s.hi, lo)
    }

    pub(crate) fn neg(self) -> Self {
        Self {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    pub(crate) fn mul(self, o: Self) -> Self {
        let p = self.hi * o.hi;
        let err = self.hi.mul_add(o.hi, -p);
        let lo = err + (self.hi * o.lo + self.lo * o.hi);
        Self::two_sum(p, lo)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn difference_of_nearly_equal_products() {
        // 1e8+1 and 1e8-1 squared differ by 4e8; the naive form loses the
        // low bits of each 1e16-sized product.
        let (a, b) = (1e8 + 1.0, 1e8 - 1.0);
        assert_eq!(diff_of_products(a, a, b, b), 4e8);
        let x = 1.0 + f64::EPSILON;
        assert_eq!(
            diff_of_products(x, x, 1.0, 1.0 + 2.0 * f64::EPSILON),
            f64::EPSILON * f64::EPSILON
        );
    }

    #[test]
    fn compensated_keeps_the_cancelled_digits() {
        let x = Compensated::new(1.0 + f64::EPSILON);
        let sq = x.mul(x);
        let diff = sq.add(Compensated::new(-1.0 - 2.0 * f64::EPSILON)).value();
        assert_eq!(diff, f64::EPSILON * f64::EPSILON);
    }
}
