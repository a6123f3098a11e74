//! Explicit Kolmogorov-distance bounds for Poisson and Gaussian
//! approximation of the normalised power divergence statistic.
//!
//! Every bound is returned term by term. Hypotheses of the underlying
//! theorems are reported through `valid` / `violated` rather than enforced:
//! the numbers are always computed and the caller decides whether they are
//! meaningful.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{ln_binomial, CompensatedSum, Scalar};
use crate::scheme::{harmonic, ClassificationScheme};
use crate::serde_util::{fmt_scalar, scalar};
use crate::statistic::StatisticConfig;

/// Berry-Esseen constant for sums of i.i.d. variables.
pub const BERRY_ESSEEN: f64 = 0.4748;

pub const ASSUME_N: &str = "n >= 4";
pub const ASSUME_MAX_P: &str = "max p <= 0.13";
pub const ASSUME_TRIPLE: &str = "(n+1)max p < 4";
pub const ASSUME_R: &str = "r >= 8";
pub const ASSUME_OCC_MAX_P: &str = "max p <= 1 - sqrt(3)/2";
pub const ASSUME_GEN_TAIL: &str = "(1-max p)^m >= 3/4";
pub const ASSUME_GEN_TRIPLE: &str = "(n+1)max p < m+2";

/// Per-term value of a four-term bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = ""))]
pub struct BoundBreakdown<S: Scalar> {
    /// Poisson approximation of the occupancy count (first term).
    #[serde(serialize_with = "scalar")]
    pub term_occupancy: S,
    /// Non-uniform cell weights (second term).
    #[serde(serialize_with = "scalar")]
    pub term_c: S,
    /// Cells with three or more observations (third term).
    #[serde(serialize_with = "scalar")]
    pub term_triple: S,
    /// Sample-term remainder (fourth term).
    #[serde(serialize_with = "scalar")]
    pub term_d: S,
    #[serde(serialize_with = "scalar")]
    pub total: S,
    #[serde(serialize_with = "scalar")]
    pub mu: S,
    #[serde(serialize_with = "scalar")]
    pub c_lambda_val: S,
    #[serde(serialize_with = "scalar")]
    pub d_lambda_val: S,
    pub valid: bool,
    pub violated: Vec<String>,
}

impl<S: Scalar> BoundBreakdown<S> {
    #[allow(clippy::too_many_arguments)]
    fn assemble(term_occupancy: S, term_c: S, term_triple: S, term_d: S, mu: S, c: S, d: S, violated: Vec<String>) -> Self {
        Self {
            term_occupancy,
            term_c,
            term_triple,
            term_d,
            total: term_occupancy + term_c + term_triple + term_d,
            mu,
            c_lambda_val: c,
            d_lambda_val: d,
            valid: violated.is_empty(),
            violated,
        }
    }

    pub const CSV_HEADER: &'static str =
        "term_occupancy,term_c,term_triple,term_d,total,mu,c_lambda,d_lambda,valid";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            fmt_scalar(self.term_occupancy),
            fmt_scalar(self.term_c),
            fmt_scalar(self.term_triple),
            fmt_scalar(self.term_d),
            fmt_scalar(self.total),
            fmt_scalar(self.mu),
            fmt_scalar(self.c_lambda_val),
            fmt_scalar(self.d_lambda_val),
            self.valid
        )
    }
}

/// Aggregates of `pi_j = C(n,m) p_j^m (1-p_j)^(n-m)` used by every bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OccupancyMoments<S> {
    /// `mu = sum_j pi_j`
    pub mu: S,
    /// `sum_j p_j pi_j`
    pub sum_p_pi: S,
    /// `sum_j pi_j^2`
    pub sum_pi_sq: S,
    pub max_p: S,
}

#[inline]
fn pi_at<S: Scalar>(ln_binom: S, n: u64, m: u64, p: S) -> S {
    let tail = if n == m { S::zero() } else { S::from_count(n - m) * (-p).ln_1p() };
    (ln_binom + S::from_count(m) * p.ln() + tail).exp()
}

fn check_level(n: u64, m: u64) -> Result<()> {
    if m == 0 {
        return Err(Error::ZeroOrder);
    }
    if n < m {
        return Err(Error::OrderExceedsTrials { n, m, required: m });
    }
    Ok(())
}

/// `pi_j` for every cell, evaluated in log space.
pub fn cell_pi<S: Scalar>(scheme: &ClassificationScheme<S>, n: u64, m: u64) -> Result<Vec<S>> {
    check_level(n, m)?;
    let lb = ln_binomial::<S>(n, m);
    Ok(scheme.probs().map(|p| pi_at(lb, n, m, p)).collect())
}

pub fn occupancy_moments<S: Scalar>(scheme: &ClassificationScheme<S>, n: u64, m: u64) -> Result<OccupancyMoments<S>> {
    check_level(n, m)?;
    let lb = ln_binomial::<S>(n, m);
    let max_p = scheme.max_prob();
    if scheme.is_uniform() {
        let r = S::from_index(scheme.r());
        let pi = pi_at(lb, n, m, max_p);
        return Ok(OccupancyMoments { mu: r * pi, sum_p_pi: pi, sum_pi_sq: r * pi * pi, max_p });
    }
    let mut mu = CompensatedSum::new();
    let mut sum_p_pi = CompensatedSum::new();
    let mut sum_pi_sq = CompensatedSum::new();
    for p in scheme.probs() {
        let pi = pi_at(lb, n, m, p);
        mu.add(pi);
        sum_p_pi.add(p * pi);
        sum_pi_sq.add(pi * pi);
    }
    Ok(OccupancyMoments { mu: mu.value(), sum_p_pi: sum_p_pi.value(), sum_pi_sq: sum_pi_sq.value(), max_p })
}

/// Poisson mean `mu = sum_j pi_j`.
pub fn mu<S: Scalar>(scheme: &ClassificationScheme<S>, n: u64, m: u64) -> Result<S> {
    occupancy_moments(scheme, n, m).map(|o| o.mu)
}

/// `max_j |1 / (p_j^lambda E[P^-lambda]) - 1|`; zero for uniform schemes and
/// `lambda = 0`.
pub fn c_lambda<S: Scalar>(scheme: &ClassificationScheme<S>, lambda: S) -> S {
    if lambda == S::zero() || scheme.is_uniform() {
        return S::zero();
    }
    let e = scheme.moment(-lambda);
    scheme
        .probs()
        .map(|p| (S::one() / (p.powf(lambda) * e) - S::one()).abs())
        .fold(S::zero(), S::max)
}

/// `2^lambda - 1` without cancellation for small `lambda`.
fn two_pow_m1<S: Scalar>(lambda: S) -> S {
    (lambda * S::LN_2()).exp_m1()
}

/// Scaled variance of `P^-lambda` (of `log P` at `lambda = 0`).
pub fn d_lambda<S: Scalar>(scheme: &ClassificationScheme<S>, n: u64, lambda: S) -> S {
    if scheme.is_uniform() {
        return S::zero();
    }
    let n = S::from_count(n);
    let four = S::lit(4.0);
    if lambda == S::zero() {
        let ln2 = S::LN_2();
        return n * scheme.var_log() / (four * ln2 * ln2);
    }
    let e = scheme.moment(-lambda);
    let k = two_pow_m1(lambda);
    n * scheme.var_power(-lambda) / (four * k * k * e * e)
}

/// `min{1, 1/mu} (6n [sum p pi]^2 + sum pi^2 + 6 m^2 mu^2 / n)`.
fn occupancy_term<S: Scalar>(o: &OccupancyMoments<S>, n: u64, m: u64) -> S {
    let nn = S::from_count(n);
    let factor = if o.mu <= S::one() { S::one() } else { S::one() / o.mu };
    let six = S::lit(6.0);
    let mm = S::from_count(m);
    factor * (six * nn * o.sum_p_pi * o.sum_p_pi + o.sum_pi_sq + six * mm * mm * o.mu * o.mu / nn)
}

/// `18 (5.55 mu c)^(0.49 / c)`, read as zero when `c = 0`.
fn weight_term<S: Scalar>(mu: S, c: S) -> S {
    if c == S::zero() {
        return S::zero();
    }
    let base = S::lit(5.55) * mu * c;
    if base == S::zero() {
        return S::zero();
    }
    S::lit(18.0) * (S::lit(0.49) / c * base.ln()).exp()
}

/// `num / (slack - (n+1) max p)`; infinite once the denominator is not
/// positive (the hypothesis `(n+1) max p < slack` has failed).
fn guarded_ratio<S: Scalar>(num: S, slack: S, n: u64, max_p: S) -> S {
    let den = slack - S::from_count(n + 1) * max_p;
    if den > S::zero() {
        num / den
    } else {
        S::infinity()
    }
}

fn remainder_term<S: Scalar>(d: S, mu: S) -> S {
    let first = S::lit(8.1) * d;
    if mu <= S::zero() {
        return first;
    }
    first.min(S::lit(2.15) * (d / mu).cbrt())
}

fn theorem1_violations<S: Scalar>(n: u64, max_p: S) -> Vec<String> {
    let mut v = Vec::new();
    if n < 4 {
        v.push(ASSUME_N.to_owned());
    }
    if !(max_p <= S::lit(0.13)) {
        v.push(ASSUME_MAX_P.to_owned());
    }
    if !(S::from_count(n + 1) * max_p < S::lit(4.0)) {
        v.push(ASSUME_TRIPLE.to_owned());
    }
    v
}

fn pair_moments<S: Scalar>(scheme: &ClassificationScheme<S>, n: u64) -> OccupancyMoments<S> {
    // With fewer than two trials no cell can hold a pair.
    occupancy_moments(scheme, n, 2).unwrap_or(OccupancyMoments {
        mu: S::zero(),
        sum_p_pi: S::zero(),
        sum_pi_sq: S::zero(),
        max_p: scheme.max_prob(),
    })
}

/// Four-term Poisson approximation bound for `T~_lambda`.
pub fn theorem1_bound<S: Scalar>(scheme: &ClassificationScheme<S>, cfg: &StatisticConfig<S>) -> BoundBreakdown<S> {
    let n = cfg.n();
    let o = pair_moments(scheme, n);
    let c = c_lambda(scheme, cfg.lambda());
    let d = d_lambda(scheme, n, cfg.lambda());
    let nn = S::from_count(n);
    BoundBreakdown::assemble(
        S::lit(45.0) * occupancy_term(&o, n, 2),
        weight_term(o.mu, c),
        guarded_ratio(S::lit(8.0) * nn * o.mu * o.max_p, S::lit(4.0), n, o.max_p),
        remainder_term(d, o.mu),
        o.mu,
        c,
        d,
        theorem1_violations(n, o.max_p),
    )
}

/// The `lambda = 0` (log-likelihood ratio) case of [`theorem1_bound`].
pub fn llr_bound<S: Scalar>(scheme: &ClassificationScheme<S>, n: u64) -> Result<BoundBreakdown<S>> {
    let cfg = StatisticConfig::new(S::zero(), n)?;
    Ok(theorem1_bound(scheme, &cfg))
}

/// Bound on `d_K(U, Z)` for the count `U` of cells holding exactly two
/// observations.
pub fn occupancy_bound<S: Scalar>(scheme: &ClassificationScheme<S>, n: u64) -> Result<S> {
    let o = occupancy_moments(scheme, n, 2)?;
    Ok(occupancy_term(&o, n, 2))
}

pub fn occupancy_violations<S: Scalar>(scheme: &ClassificationScheme<S>, n: u64) -> Vec<String> {
    let mut v = Vec::new();
    if n < 4 {
        v.push(ASSUME_N.to_owned());
    }
    if !(scheme.max_prob() <= S::one() - S::lit(3.0).sqrt() / S::lit(2.0)) {
        v.push(ASSUME_OCC_MAX_P.to_owned());
    }
    v
}

/// Extra cost of replacing `Poisson(mu)` by `Poisson(eta / 2)`.
pub fn remark1_extra<S: Scalar>(mu: S, eta: S) -> S {
    let half_eta = eta / S::lit(2.0);
    let root_arm = (S::lit(2.0) / S::E()).sqrt() * (mu.sqrt() - half_eta.sqrt()).abs();
    let lin_arm = (mu - half_eta).abs();
    S::lit(45.0) * root_arm.min(lin_arm)
}

/// Two-term bound for uniform allocation over `r` cells, valid for every
/// `lambda > -1`.
pub fn uniform_bound<S: Scalar>(n: u64, r: usize) -> S {
    uniform_breakdown(n, r).total
}

pub fn uniform_violations(n: u64, r: usize) -> Vec<String> {
    let mut v = Vec::new();
    if n < 4 {
        v.push(ASSUME_N.to_owned());
    }
    if r < 8 {
        v.push(ASSUME_R.to_owned());
    }
    if !((n as f64 + 1.0) / (r as f64) < 4.0) {
        v.push(ASSUME_TRIPLE.to_owned());
    }
    v
}

/// [`uniform_bound`] as a breakdown: the pair term lands in
/// `term_occupancy`, the triple term in `term_triple`, and `mu` is the
/// exact Poisson mean `C(n,2) r^-1 (1 - 1/r)^(n-2)`.
pub fn uniform_breakdown<S: Scalar>(n: u64, r: usize) -> BoundBreakdown<S> {
    let nn = S::from_count(n);
    let rr = S::from_index(r);
    let n3 = nn * nn * nn;
    let r2 = rr * rr;
    let first = S::lit(45.0) * n3 / (r2 * r2)
        * (S::lit(3.0) * nn * nn / S::lit(2.0) + nn * rr / S::lit(4.0) + S::lit(6.0) * r2);
    let den = S::lit(4.0) * rr - (nn + S::one());
    let third = if den > S::zero() { S::lit(4.0) * n3 / (rr * den) } else { S::infinity() };
    let mu = if n >= 2 {
        (ln_binomial::<S>(n, 2) - rr.ln() + S::from_count(n - 2) * (-S::one() / rr).ln_1p()).exp()
    } else {
        S::zero()
    };
    BoundBreakdown::assemble(first, S::zero(), third, S::zero(), mu, S::zero(), S::zero(), uniform_violations(n, r))
}

/// Closed form of `c_lambda` for the discrete power scheme with `lambda > 0`.
///
/// The weight `z_r(a) j^(a lambda) / z_r(a(1-lambda))` is increasing in `j`,
/// so the maximum deviation sits at `j = r` (above 1) or at `j = 1` (below
/// 1). For small `a` the `j = 1` arm is the larger one.
pub fn dpd_c_lambda<S: Scalar>(r: usize, a: S, lambda: S) -> S {
    let z1 = harmonic(r, a);
    let z_single = harmonic(r, a * (S::one() - lambda));
    let last = z1 * S::from_index(r).powf(a * lambda) / z_single - S::one();
    let first = S::one() - z1 / z_single;
    last.abs().max(first.abs())
}

/// Closed form of `d_lambda` for the discrete power scheme, `lambda != 0`.
pub fn dpd_d_lambda<S: Scalar>(n: u64, r: usize, a: S, lambda: S) -> S {
    let z1 = harmonic(r, a);
    let z_single = harmonic(r, a * (S::one() - lambda));
    let z_double = harmonic(r, a * (S::one() - S::lit(2.0) * lambda));
    let k = two_pow_m1(lambda);
    S::from_count(n) / (S::lit(4.0) * k * k) * (z_double * z1 / (z_single * z_single) - S::one())
}

/// Bound for the discrete power scheme `p_j = j^-a / z_r(a)`, built from
/// generalised harmonic numbers, with the first arm of each minimum.
/// `mu` holds the upper estimate `n^2 z_r(2a) / (2 z_r(a)^2)` used inside.
pub fn dpd_bound<S: Scalar>(n: u64, r: usize, a: S, lambda: S) -> Result<BoundBreakdown<S>> {
    if !(a >= S::zero() && a <= S::one()) {
        return Err(Error::ExponentOutOfRange(a.as_f64()));
    }
    if !(lambda > S::zero()) || !lambda.is_finite() {
        return Err(Error::LambdaOutOfRange(lambda.as_f64()));
    }
    if r == 0 {
        return Err(Error::EmptyScheme);
    }
    let nn = S::from_count(n);
    let n2 = nn * nn;
    let n3 = n2 * nn;
    let z1 = harmonic(r, a);
    let z2 = harmonic(r, S::lit(2.0) * a);
    let z3 = harmonic(r, S::lit(3.0) * a);
    let z4 = harmonic(r, S::lit(4.0) * a);
    let z1_sq = z1 * z1;

    let first = S::lit(45.0) * n3 / (z1_sq * z1_sq)
        * (S::lit(3.0) * n2 * z3 * z3 / (S::lit(2.0) * z1_sq) + nn * z4 / S::lit(4.0) + S::lit(6.0) * z2 * z2);

    let c = dpd_c_lambda(r, a, lambda);
    let second = if c == S::zero() {
        S::zero()
    } else {
        let base = S::lit(2.78) * n2 * c * z2 / z1_sq;
        S::lit(18.0) * (S::lit(0.49) / c * base.ln()).exp()
    };

    let den = z1_sq * (S::lit(4.0) * z1 - (nn + S::one()));
    let third = if den > S::zero() { S::lit(4.0) * n3 * z2 / den } else { S::infinity() };

    let z_single = harmonic(r, a * (S::one() - lambda));
    let z_double = harmonic(r, a * (S::one() - S::lit(2.0) * lambda));
    let excess = z_double * z1 / (z_single * z_single) - S::one();
    let k = two_pow_m1(lambda);
    let fourth = S::lit(2.025) * nn / (k * k) * excess;
    let d = nn / (S::lit(4.0) * k * k) * excess;

    let mu = n2 * z2 / (S::lit(2.0) * z1_sq);
    let violated = theorem1_violations(n, S::one() / z1);
    Ok(BoundBreakdown::assemble(first, second, third, fourth, mu, c, d, violated))
}

/// Gaussian approximation bound for `(T~ - mu) / sqrt(mu)`: the Poisson
/// bound plus the Berry-Esseen term `0.4748 / sqrt(mu)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = ""))]
pub struct GaussianBound<S: Scalar> {
    pub poisson: BoundBreakdown<S>,
    #[serde(serialize_with = "scalar")]
    pub berry_esseen_term: S,
    #[serde(serialize_with = "scalar")]
    pub total: S,
}

pub fn gaussian_bound<S: Scalar>(scheme: &ClassificationScheme<S>, cfg: &StatisticConfig<S>) -> Result<GaussianBound<S>> {
    let poisson = theorem1_bound(scheme, cfg);
    if !(poisson.mu > S::zero()) {
        return Err(Error::ZeroMean);
    }
    let berry_esseen_term = S::lit(BERRY_ESSEEN) / poisson.mu.sqrt();
    let total = poisson.total + berry_esseen_term;
    Ok(GaussianBound { poisson, berry_esseen_term, total })
}

/// Simplified Gaussian bound for uniform allocation, using
/// `mu <= n^2 / (2r)` and `min{1, 1/mu} <= 1/mu`. Looser than
/// [`gaussian_bound`] on a uniform scheme.
pub fn uniform_gaussian_bound<S: Scalar>(n: u64, r: usize) -> S {
    let nn = S::from_count(n);
    let rr = S::from_index(r);
    let nm1 = nn - S::one();
    // (1 - 1/r)^(2-n)
    let inflation = ((S::lit(2.0) - nn) * (-S::one() / rr).ln_1p()).exp();
    let first = S::lit(90.0) * nn * nn * nn / (nm1 * nm1 * rr * rr * rr)
        * inflation
        * (S::lit(3.0) * nn * nn / S::lit(2.0) + nn * rr / S::lit(4.0) + S::lit(6.0) * rr * rr);
    let den = S::lit(4.0) * rr - (nn + S::one());
    let second = if den > S::zero() { S::lit(4.0) * nn * nn * nn / (rr * den) } else { S::infinity() };
    let third = S::lit(BERRY_ESSEEN) / nm1 * (S::lit(2.0) * rr * inflation).sqrt();
    first + second + third
}

/// Ingredients of the bound for `T = W + R` with
/// `W = g(m)^-1 sum_j h(p_j) g(N_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedSpec<S> {
    m: u64,
    h_values: Vec<S>,
    var_r: S,
}

impl<S: Scalar> GeneralizedSpec<S> {
    pub fn new(m: u64, h_values: Vec<S>, var_r: S) -> Result<Self> {
        if m == 0 {
            return Err(Error::ZeroOrder);
        }
        if !(var_r >= S::zero()) {
            return Err(Error::NegativeVariance(var_r.as_f64()));
        }
        if let Some((index, &value)) = h_values.iter().enumerate().find(|(_, h)| !(**h > S::zero())) {
            return Err(Error::NonPositiveWeight { index, value: value.as_f64() });
        }
        Ok(Self { m, h_values, var_r })
    }

    /// `h = 1` on `r` cells, no remainder.
    pub fn flat(r: usize, m: u64, var_r: S) -> Result<Self> {
        Self::new(m, vec![S::one(); r], var_r)
    }

    /// The power divergence instance: `m = 2`,
    /// `h(p) = 1 / (p^lambda E[P^-lambda])`, `Var(R)` replaced by `d_lambda`.
    pub fn power_divergence(scheme: &ClassificationScheme<S>, cfg: &StatisticConfig<S>) -> Result<Self> {
        let lambda = cfg.lambda();
        let h = if lambda == S::zero() || scheme.is_uniform() {
            vec![S::one(); scheme.r()]
        } else {
            let e = scheme.moment(-lambda);
            scheme.probs().map(|p| S::one() / (p.powf(lambda) * e)).collect()
        };
        Self::new(2, h, d_lambda(scheme, cfg.n(), lambda))
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn h_values(&self) -> &[S] {
        &self.h_values
    }

    pub fn var_r(&self) -> S {
        self.var_r
    }
}

/// Four-term bound at occupancy level `m`, with `c = max_j |h(p_j) - 1|`.
pub fn generalized_bound<S: Scalar>(
    spec: &GeneralizedSpec<S>,
    scheme: &ClassificationScheme<S>,
    n: u64,
) -> Result<BoundBreakdown<S>> {
    let m = spec.m;
    if n < 2 * m {
        return Err(Error::OrderExceedsTrials { n, m, required: 2 * m });
    }
    if spec.h_values.len() != scheme.r() {
        return Err(Error::DimensionMismatch { expected: scheme.r(), found: spec.h_values.len() });
    }
    let o = occupancy_moments(scheme, n, m)?;
    let c = spec.h_values.iter().map(|&h| (h - S::one()).abs()).fold(S::zero(), S::max);
    let nn = S::from_count(n);
    let mm = S::from_count(m);
    let two = S::lit(2.0);
    let triple = guarded_ratio(
        S::lit(6.0) * (mm + two) * nn * o.mu * o.max_p / (mm + S::one()),
        mm + two,
        n,
        o.max_p,
    );
    let mut violated = Vec::new();
    if !((S::one() - o.max_p).powi(m.min(i32::MAX as u64) as i32) >= S::lit(0.75)) {
        violated.push(ASSUME_GEN_TAIL.to_owned());
    }
    if !(S::from_count(n + 1) * o.max_p < mm + two) {
        violated.push(ASSUME_GEN_TRIPLE.to_owned());
    }
    Ok(BoundBreakdown::assemble(
        S::lit(45.0) * occupancy_term(&o, n, m),
        weight_term(o.mu, c),
        triple,
        S::lit(8.1) * spec.var_r,
        o.mu,
        c,
        spec.var_r,
        violated,
    ))
}
