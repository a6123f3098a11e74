//! Classification schemes: the cell probabilities of a multinomial experiment
//! and the moments `E[P^x] = sum_j p_j^(1+x)` of the size-biased cell
//! probability `P`.

use std::collections::HashMap;
use std::sync::RwLock;

use crate::error::{Error, Result};
use crate::scalar::{compensated_sum, CompensatedSum, Scalar};

/// How a scheme was constructed. Uniform and power schemes keep their
/// parameters so moments can be taken in closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchemeKind<S> {
    Explicit,
    Uniform,
    Power { a: S },
}

/// Input to [`ClassificationScheme::build`].
#[derive(Debug, Clone, PartialEq)]
pub enum SchemeDescriptor<S> {
    Explicit(Vec<S>),
    Uniform { r: usize },
    Power { a: S, r: usize },
}

#[derive(Debug, Clone)]
enum Storage<S> {
    /// Every cell has probability `p`; nothing is materialized.
    Constant { p: S },
    Dense(Vec<S>),
}

/// A validated probability vector `p_1..p_r`, strictly positive and summing
/// to one.
#[derive(Debug)]
pub struct ClassificationScheme<S: Scalar> {
    kind: SchemeKind<S>,
    r: usize,
    storage: Storage<S>,
    max_prob: S,
    /// `z_r(a)` for power schemes.
    normalizer: S,
    moments: RwLock<HashMap<u64, S>>,
}

impl<S: Scalar> Clone for ClassificationScheme<S> {
    fn clone(&self) -> Self {
        let moments = self.moments.read().map(|m| m.clone()).unwrap_or_default();
        Self {
            kind: self.kind,
            r: self.r,
            storage: self.storage.clone(),
            max_prob: self.max_prob,
            normalizer: self.normalizer,
            moments: RwLock::new(moments),
        }
    }
}

impl<S: Scalar> PartialEq for ClassificationScheme<S> {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.r == other.r && self.probs().eq(other.probs())
    }
}

/// Generalised harmonic number `z_r(a) = sum_{k=1..r} k^(-a)`.
///
/// Terms are added smallest first with compensation, so `z_r(0) = r`
/// exactly and large `r` keeps full precision.
pub fn harmonic<S: Scalar>(r: usize, a: S) -> S {
    if a == S::zero() {
        return S::from_index(r);
    }
    let mut acc = CompensatedSum::new();
    if a > S::zero() {
        for k in (1..=r).rev() {
            acc.add(S::from_index(k).powf(-a));
        }
    } else {
        // Negative exponent: terms grow with k, so add from k = 1 upwards.
        for k in 1..=r {
            acc.add(S::from_index(k).powf(-a));
        }
    }
    acc.value()
}

impl<S: Scalar> ClassificationScheme<S> {
    pub fn build(descriptor: SchemeDescriptor<S>) -> Result<Self> {
        match descriptor {
            SchemeDescriptor::Explicit(p) => Self::explicit(p),
            SchemeDescriptor::Uniform { r } => Self::uniform(r),
            SchemeDescriptor::Power { a, r } => Self::power(a, r),
        }
    }

    pub fn uniform(r: usize) -> Result<Self> {
        if r == 0 {
            return Err(Error::EmptyScheme);
        }
        let p = S::one() / S::from_index(r);
        Ok(Self::from_parts(SchemeKind::Uniform, r, Storage::Constant { p }, p, S::from_index(r)))
    }

    /// Discrete power law `p_j = j^(-a) / z_r(a)`, `a` in `[0, 1]`.
    pub fn power(a: S, r: usize) -> Result<Self> {
        if r == 0 {
            return Err(Error::EmptyScheme);
        }
        if !(a >= S::zero() && a <= S::one()) {
            return Err(Error::ExponentOutOfRange(a.as_f64()));
        }
        let z = harmonic(r, a);
        let probs: Vec<S> = (1..=r).map(|j| S::from_index(j).powf(-a) / z).collect();
        let max_prob = probs[0];
        Ok(Self::from_parts(SchemeKind::Power { a }, r, Storage::Dense(probs), max_prob, z))
    }

    pub fn explicit(probs: Vec<S>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::EmptyScheme);
        }
        if let Some((index, &value)) = probs.iter().enumerate().find(|(_, p)| !(**p > S::zero())) {
            return Err(Error::NonPositiveProbability { index, value: value.as_f64() });
        }
        let sum = compensated_sum(probs.iter().copied());
        let tol = S::lit(1e-12).max(S::lit(4.0) * S::epsilon());
        if !((sum - S::one()).abs() <= tol) {
            return Err(Error::NotNormalized { sum: sum.as_f64() });
        }
        let max_prob = probs.iter().copied().fold(S::zero(), S::max);
        let r = probs.len();
        Ok(Self::from_parts(SchemeKind::Explicit, r, Storage::Dense(probs), max_prob, S::one()))
    }

    fn from_parts(kind: SchemeKind<S>, r: usize, storage: Storage<S>, max_prob: S, normalizer: S) -> Self {
        Self { kind, r, storage, max_prob, normalizer, moments: RwLock::new(HashMap::new()) }
    }

    pub fn kind(&self) -> SchemeKind<S> {
        self.kind
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.kind, SchemeKind::Uniform)
    }

    /// Number of cells.
    pub fn r(&self) -> usize {
        self.r
    }

    /// Probability of cell `j` (0-based).
    #[inline]
    pub fn prob(&self, j: usize) -> S {
        match &self.storage {
            Storage::Constant { p } => *p,
            Storage::Dense(v) => v[j],
        }
    }

    pub fn probs(&self) -> impl Iterator<Item = S> + '_ {
        (0..self.r).map(move |j| self.prob(j))
    }

    pub fn max_prob(&self) -> S {
        self.max_prob
    }

    /// Materialized probability vector.
    pub fn to_vec(&self) -> Vec<S> {
        self.probs().collect()
    }

    /// `z_r(a)` for power schemes, `r` for uniform ones and 1 otherwise.
    pub fn normalizer(&self) -> S {
        self.normalizer
    }

    /// `E[f(P)] = sum_j p_j f(p_j)`, compensated; a single evaluation for
    /// uniform schemes.
    pub fn expect<F: Fn(S) -> S>(&self, f: F) -> S {
        match &self.storage {
            Storage::Constant { p } => f(*p),
            Storage::Dense(v) => {
                let mut acc = CompensatedSum::new();
                for &p in v {
                    acc.add(p * f(p));
                }
                acc.value()
            }
        }
    }

    /// `E[P^x] = sum_j p_j^(1+x)`, memoized per `x`.
    pub fn moment(&self, x: S) -> S {
        let key = x.as_f64().to_bits();
        if let Some(v) = self.moments.read().ok().and_then(|m| m.get(&key).copied()) {
            return v;
        }
        let value = match self.kind {
            SchemeKind::Uniform => S::from_index(self.r).powf(-x),
            SchemeKind::Power { a } => {
                harmonic(self.r, a * (S::one() + x)) / self.normalizer.powf(S::one() + x)
            }
            SchemeKind::Explicit => self.expect(|p| p.powf(x)),
        };
        if let Ok(mut m) = self.moments.write() {
            m.insert(key, value);
        }
        value
    }

    /// `Var(log P)`, centred two-pass; exactly zero for uniform schemes.
    pub fn var_log(&self) -> S {
        if self.is_uniform() {
            return S::zero();
        }
        let mean = self.expect(|p| p.ln());
        self.expect(|p| {
            let d = p.ln() - mean;
            d * d
        })
        .max(S::zero())
    }

    /// `Var(P^x)`, centred two-pass; exactly zero for uniform schemes.
    pub fn var_power(&self, x: S) -> S {
        if self.is_uniform() {
            return S::zero();
        }
        let mean = self.moment(x);
        self.expect(|p| {
            let d = p.powf(x) - mean;
            d * d
        })
        .max(S::zero())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn uniform_entries_are_one_over_r() {
        let s = ClassificationScheme::<f64>::uniform(4).unwrap();
        assert_eq!(s.to_vec(), vec![0.25; 4]);
        assert_eq!(s.max_prob(), 0.25);
    }

    #[test]
    fn power_one_two() {
        let s = ClassificationScheme::<f64>::power(1.0, 2).unwrap();
        let p = s.to_vec();
        assert!(rel(p[0], 2.0 / 3.0) < 1e-15);
        assert!(rel(p[1], 1.0 / 3.0) < 1e-15);
        assert_eq!(s.normalizer(), 1.5);
    }

    #[test]
    fn explicit_validation() {
        assert!(ClassificationScheme::<f64>::explicit(vec![0.6, 0.4]).is_ok());
        assert!(matches!(
            ClassificationScheme::<f64>::explicit(vec![0.6, 0.3]),
            Err(Error::NotNormalized { .. })
        ));
        assert!(matches!(
            ClassificationScheme::<f64>::explicit(vec![1.0, 0.0]),
            Err(Error::NonPositiveProbability { index: 1, .. })
        ));
        assert!(matches!(
            ClassificationScheme::<f64>::explicit(vec![1.2, -0.2]),
            Err(Error::NonPositiveProbability { index: 1, .. })
        ));
        assert_eq!(ClassificationScheme::<f64>::explicit(vec![]).unwrap_err(), Error::EmptyScheme);
    }

    #[test]
    fn descriptor_errors() {
        assert_eq!(ClassificationScheme::<f64>::uniform(0).unwrap_err(), Error::EmptyScheme);
        assert!(matches!(
            ClassificationScheme::<f64>::power(1.5, 10),
            Err(Error::ExponentOutOfRange(_))
        ));
        assert!(matches!(
            ClassificationScheme::<f64>::power(-0.1, 10),
            Err(Error::ExponentOutOfRange(_))
        ));
        assert!(matches!(
            ClassificationScheme::<f64>::power(f64::NAN, 10),
            Err(Error::ExponentOutOfRange(_))
        ));
    }

    #[test]
    fn harmonic_values() {
        assert!(rel(harmonic::<f64>(4, 1.0), 25.0 / 12.0) < 1e-15);
        assert_eq!(harmonic::<f64>(1_000_000, 0.0), 1_000_000.0);
        for a in [0.0, 0.3, 1.0, 2.5, -1.0] {
            assert_eq!(harmonic::<f64>(1, a), 1.0);
        }
        // sum_{k<=r} k = r(r+1)/2
        assert_eq!(harmonic::<f64>(100, -1.0), 5050.0);
    }

    #[test]
    fn moment_examples() {
        let u = ClassificationScheme::<f64>::uniform(4).unwrap();
        assert_eq!(u.moment(-1.0), 4.0);
        assert!(rel(u.moment(0.5), 4f64.powf(-0.5)) < 1e-15);
        let p = ClassificationScheme::<f64>::power(1.0, 2).unwrap();
        assert!(rel(p.moment(-2.0), 4.5) < 1e-14);
        // second call is served from the memo table
        assert_eq!(p.moment(-2.0), p.moment(-2.0));
    }

    #[test]
    fn var_log_examples() {
        assert_eq!(ClassificationScheme::<f64>::uniform(17).unwrap().var_log(), 0.0);
        let half = ClassificationScheme::<f64>::explicit(vec![0.5, 0.5]).unwrap();
        assert_eq!(half.var_log(), 0.0);
        let p = ClassificationScheme::<f64>::power(1.0, 2).unwrap();
        let (a, b) = (2.0f64 / 3.0, 1.0f64 / 3.0);
        let m = a * a.ln() + b * b.ln();
        let expected = a * a.ln().powi(2) + b * b.ln().powi(2) - m * m;
        assert!(rel(p.var_log(), expected) < 1e-12);
    }

    #[test]
    fn works_in_single_precision() {
        let p = ClassificationScheme::<f32>::power(0.5, 100).unwrap();
        assert!((p.moment(0.0) - 1.0).abs() < 1e-5);
        let e = ClassificationScheme::<f32>::explicit(vec![0.1; 10]).unwrap();
        assert_eq!(e.r(), 10);
    }
}
