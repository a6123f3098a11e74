//! Scalar abstraction shared by the scheme, statistic and bound code.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Never fails for the supported types.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count representable")
    }

    #[inline]
    fn from_index(n: usize) -> Self {
        Self::from_usize(n).expect("index representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum<S> {
    sum: S,
    carry: S,
}

impl<S: Scalar> CompensatedSum<S> {
    pub fn new() -> Self {
        Self { sum: S::zero(), carry: S::zero() }
    }

    #[inline]
    pub fn add(&mut self, x: S) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry = self.carry + ((self.sum - t) + x);
        } else {
            self.carry = self.carry + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> S {
        self.sum + self.carry
    }
}

/// Compensated sum of an iterator.
pub fn compensated_sum<S: Scalar, I: IntoIterator<Item = S>>(items: I) -> S {
    let mut acc = CompensatedSum::new();
    for x in items {
        acc.add(x);
    }
    acc.value()
}

/// `ln C(n, k)` as a sum of `k' = min(k, n - k)` logarithms.
pub fn ln_binomial<S: Scalar>(n: u64, k: u64) -> S {
    debug_assert!(k <= n);
    let k = k.min(n - k);
    let mut acc = CompensatedSum::new();
    for i in 1..=k {
        let num = S::from_count(n - k + i);
        let den = S::from_count(i);
        acc.add((num / den).ln());
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut xs = vec![1.0f64];
        xs.extend(std::iter::repeat_n(1e-16, 10_000));
        let s = compensated_sum(xs.iter().copied());
        assert!((s - (1.0 + 1e-12)).abs() < 1e-15);
    }

    #[test]
    fn ln_binomial_small_cases() {
        assert_eq!(ln_binomial::<f64>(7, 0), 0.0);
        assert_eq!(ln_binomial::<f64>(7, 7), 0.0);
        assert!((ln_binomial::<f64>(4, 2) - 6f64.ln()).abs() < 1e-15);
        assert!((ln_binomial::<f64>(10, 3).exp() - 120.0).abs() < 1e-11);
        assert!((ln_binomial::<f32>(5, 2).exp() - 10.0).abs() < 1e-4);
    }
}
