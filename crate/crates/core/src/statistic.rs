//! The power divergence statistic `T_lambda`, its Poisson-normalised form
//! `T~_lambda`, and the cell-sum / sample-sum split `T~ = W + R`.

use crate::error::{Error, Result};
use crate::scalar::{CompensatedSum, Scalar};
use crate::scheme::ClassificationScheme;

/// Index `lambda > -1` and trial count `n >= 1`, with `g_lambda(2)` cached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatisticConfig<S> {
    lambda: S,
    n: u64,
    g2: S,
}

impl<S: Scalar> StatisticConfig<S> {
    pub fn new(lambda: S, n: u64) -> Result<Self> {
        if !(lambda > -S::one()) || !lambda.is_finite() {
            return Err(Error::LambdaOutOfRange(lambda.as_f64()));
        }
        if n == 0 {
            return Err(Error::ZeroTrials);
        }
        let g2 = g_raw(lambda, S::lit(2.0));
        Ok(Self { lambda, n, g2 })
    }

    pub fn lambda(&self) -> S {
        self.lambda
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// `g_lambda(2)`, nonzero for every `lambda > -1`.
    pub fn g2(&self) -> S {
        self.g2
    }

    /// Same configuration with a different trial count.
    pub fn with_n(&self, n: u64) -> Result<Self> {
        Self::new(self.lambda, n)
    }

    pub fn g(&self, x: S) -> Result<S> {
        g_lambda(self, x)
    }

    #[inline]
    pub(crate) fn g_unchecked(&self, x: S) -> S {
        g_raw(self.lambda, x)
    }
}

/// `g_lambda(x)`: `2x log x` at `lambda = 0`, otherwise
/// `2x (x^lambda - 1) / (lambda (lambda + 1))`, with `g_lambda(0) = 0`.
pub fn g_lambda<S: Scalar>(cfg: &StatisticConfig<S>, x: S) -> Result<S> {
    if !(x >= S::zero()) {
        return Err(Error::NegativeArgument(x.as_f64()));
    }
    Ok(g_raw(cfg.lambda, x))
}

#[inline]
fn g_raw<S: Scalar>(lambda: S, x: S) -> S {
    if x == S::zero() {
        return S::zero();
    }
    let two = S::lit(2.0);
    let lx = x.ln();
    if lambda == S::zero() {
        two * x * lx
    } else {
        // expm1 keeps x^lambda - 1 accurate near x = 1 and for tiny lambda
        two * x * (lambda * lx).exp_m1() / (lambda * (lambda + S::one()))
    }
}

/// Cell counts `N_1..N_r`, held sparsely as sorted `(cell, count)` pairs
/// with positive counts. Cells are 0-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counts {
    r: usize,
    n: u64,
    cells: Vec<(usize, u64)>,
}

impl Counts {
    pub fn from_dense(dense: &[u64]) -> Self {
        let cells: Vec<(usize, u64)> =
            dense.iter().enumerate().filter(|(_, &c)| c > 0).map(|(j, &c)| (j, c)).collect();
        let n = cells.iter().map(|&(_, c)| c).sum();
        Self { r: dense.len(), n, cells }
    }

    /// Builds counts from `(cell, count)` pairs in any order; duplicates are
    /// merged and zero counts dropped.
    pub fn from_sparse<I: IntoIterator<Item = (usize, u64)>>(r: usize, pairs: I) -> Result<Self> {
        let mut cells: Vec<(usize, u64)> = Vec::new();
        for (cell, count) in pairs {
            if cell >= r {
                return Err(Error::IndexOutOfRange { index: cell, r });
            }
            if count > 0 {
                cells.push((cell, count));
            }
        }
        cells.sort_unstable_by_key(|&(c, _)| c);
        let mut merged: Vec<(usize, u64)> = Vec::with_capacity(cells.len());
        for (cell, count) in cells {
            match merged.last_mut() {
                Some((last, total)) if *last == cell => *total += count,
                _ => merged.push((cell, count)),
            }
        }
        let n = merged.iter().map(|&(_, c)| c).sum();
        Ok(Self { r, n, cells: merged })
    }

    /// Aggregates a sequence of trial outcomes (0-based cell indices).
    pub fn from_assignments(r: usize, assignments: &[usize]) -> Result<Self> {
        if let Some(&index) = assignments.iter().find(|&&j| j >= r) {
            return Err(Error::IndexOutOfRange { index, r });
        }
        let mut sorted = assignments.to_vec();
        sorted.sort_unstable();
        Ok(Self::from_sorted_cells(r, &sorted))
    }

    /// Run-length encodes an ascending list of in-range cell indices.
    pub(crate) fn from_sorted_cells(r: usize, sorted: &[usize]) -> Self {
        let mut cells: Vec<(usize, u64)> = Vec::new();
        for &cell in sorted {
            match cells.last_mut() {
                Some((last, count)) if *last == cell => *count += 1,
                _ => cells.push((cell, 1)),
            }
        }
        Self { r, n: sorted.len() as u64, cells }
    }

    pub fn empty(r: usize) -> Self {
        Self { r, n: 0, cells: Vec::new() }
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// Total `n = sum_j N_j`.
    pub fn total(&self) -> u64 {
        self.n
    }

    /// Occupied cells in ascending order.
    pub fn occupied(&self) -> &[(usize, u64)] {
        &self.cells
    }

    pub fn get(&self, cell: usize) -> u64 {
        self.cells
            .binary_search_by_key(&cell, |&(c, _)| c)
            .map(|i| self.cells[i].1)
            .unwrap_or(0)
    }

    pub fn to_dense(&self) -> Vec<u64> {
        let mut dense = vec![0; self.r];
        for &(cell, count) in &self.cells {
            dense[cell] = count;
        }
        dense
    }

    /// Number of cells holding exactly `m` observations.
    pub fn occupancy(&self, m: u64) -> u64 {
        if m == 0 {
            return (self.r - self.cells.len()) as u64;
        }
        self.cells.iter().filter(|&&(_, c)| c == m).count() as u64
    }
}

/// Number of cells with `N_j == m`.
pub fn occupancy_count(counts: &Counts, m: u64) -> u64 {
    counts.occupancy(m)
}

fn check_counts<S: Scalar>(cfg: &StatisticConfig<S>, scheme: &ClassificationScheme<S>, counts: &Counts) -> Result<()> {
    if counts.r() != scheme.r() {
        return Err(Error::DimensionMismatch { expected: scheme.r(), found: counts.r() });
    }
    if counts.total() != cfg.n() {
        return Err(Error::CountTotal { expected: cfg.n(), found: counts.total() });
    }
    Ok(())
}

/// Above this many cells per trial the sparse representation is used.
const SPARSE_RATIO: usize = 10;

fn prefers_sparse<S: Scalar>(cfg: &StatisticConfig<S>, scheme: &ClassificationScheme<S>) -> bool {
    scheme.r() as u128 > SPARSE_RATIO as u128 * cfg.n() as u128
}

/// `T_lambda = n sum_j p_j g_lambda(N_j / (n p_j))`.
pub fn t_lambda<S: Scalar>(cfg: &StatisticConfig<S>, scheme: &ClassificationScheme<S>, counts: &Counts) -> Result<S> {
    if prefers_sparse(cfg, scheme) {
        t_lambda_sparse(cfg, scheme, counts)
    } else {
        t_lambda_dense(cfg, scheme, counts)
    }
}

/// The defining sum over all `r` cells.
pub fn t_lambda_dense<S: Scalar>(
    cfg: &StatisticConfig<S>,
    scheme: &ClassificationScheme<S>,
    counts: &Counts,
) -> Result<S> {
    check_counts(cfg, scheme, counts)?;
    let n = S::from_count(cfg.n());
    let dense = counts.to_dense();
    let mut acc = CompensatedSum::new();
    for (j, &c) in dense.iter().enumerate() {
        let p = scheme.prob(j);
        acc.add(p * cfg.g_unchecked(S::from_count(c) / (n * p)));
    }
    Ok(n * acc.value())
}

/// `n^(-lambda) sum_j p_j^(-lambda) g(N_j) + n sum_j N_j p_j g(1/(n p_j))`,
/// touching occupied cells only.
pub fn t_lambda_sparse<S: Scalar>(
    cfg: &StatisticConfig<S>,
    scheme: &ClassificationScheme<S>,
    counts: &Counts,
) -> Result<S> {
    check_counts(cfg, scheme, counts)?;
    let n = S::from_count(cfg.n());
    let lambda = cfg.lambda();
    let mut cell_term = CompensatedSum::new();
    let mut sample_term = CompensatedSum::new();
    for &(j, c) in counts.occupied() {
        let p = scheme.prob(j);
        let c = S::from_count(c);
        cell_term.add(p.powf(-lambda) * cfg.g_unchecked(c));
        sample_term.add(c * p * cfg.g_unchecked(S::one() / (n * p)));
    }
    Ok(n.powf(-lambda) * cell_term.value() + n * sample_term.value())
}

/// Affine map `T~ = scale (T - center)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization<S> {
    pub center: S,
    pub scale: S,
}

impl<S: Scalar> Normalization<S> {
    pub fn apply(&self, t: S) -> S {
        self.scale * (t - self.center)
    }

    /// `center = n^2 sum_j p_j^2 g(1/(n p_j))`, `scale = n^lambda / (g(2) E[P^-lambda])`,
    /// summed cell by cell regardless of the scheme kind.
    pub fn direct(cfg: &StatisticConfig<S>, scheme: &ClassificationScheme<S>) -> Self {
        let n = S::from_count(cfg.n());
        let mut acc = CompensatedSum::new();
        let mut moment = CompensatedSum::new();
        for p in scheme.probs() {
            acc.add(p * p * cfg.g_unchecked(S::one() / (n * p)));
            moment.add(p * p.powf(-cfg.lambda()));
        }
        Self {
            center: n * n * acc.value(),
            scale: n.powf(cfg.lambda()) / (cfg.g2() * moment.value()),
        }
    }
}

/// Centre and scale of the normalised statistic; closed form for uniform
/// schemes.
pub fn normalization<S: Scalar>(cfg: &StatisticConfig<S>, scheme: &ClassificationScheme<S>) -> Normalization<S> {
    let n = S::from_count(cfg.n());
    if scheme.is_uniform() {
        let r = S::from_index(scheme.r());
        return Normalization {
            center: n * n / r * cfg.g_unchecked(r / n),
            scale: (n / r).powf(cfg.lambda()) / cfg.g2(),
        };
    }
    let center = n * n * scheme.expect(|p| p * cfg.g_unchecked(S::one() / (n * p)));
    let scale = n.powf(cfg.lambda()) / (cfg.g2() * scheme.moment(-cfg.lambda()));
    Normalization { center, scale }
}

/// `T~_lambda`, via the occupied-cell split when `r > 10 n`.
pub fn t_tilde<S: Scalar>(cfg: &StatisticConfig<S>, scheme: &ClassificationScheme<S>, counts: &Counts) -> Result<S> {
    if prefers_sparse(cfg, scheme) {
        check_counts(cfg, scheme, counts)?;
        Ok(SplitEvaluator::new(cfg, scheme).split(counts).total())
    } else {
        t_tilde_dense(cfg, scheme, counts)
    }
}

pub fn t_tilde_dense<S: Scalar>(
    cfg: &StatisticConfig<S>,
    scheme: &ClassificationScheme<S>,
    counts: &Counts,
) -> Result<S> {
    let t = t_lambda_dense(cfg, scheme, counts)?;
    Ok(normalization(cfg, scheme).apply(t))
}

/// `T~ = W + R`: `W` sums over cells, `R` is the centred sample term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepresentationSplit<S> {
    pub w_part: S,
    pub r_part: S,
}

impl<S: Scalar> RepresentationSplit<S> {
    pub fn total(&self) -> S {
        self.w_part + self.r_part
    }
}

/// Split from the raw trial outcomes (0-based cell indices).
pub fn representation_split<S: Scalar>(
    cfg: &StatisticConfig<S>,
    scheme: &ClassificationScheme<S>,
    assignments: &[usize],
) -> Result<RepresentationSplit<S>> {
    let counts = Counts::from_assignments(scheme.r(), assignments)?;
    split_from_counts(cfg, scheme, &counts)
}

pub fn split_from_counts<S: Scalar>(
    cfg: &StatisticConfig<S>,
    scheme: &ClassificationScheme<S>,
    counts: &Counts,
) -> Result<RepresentationSplit<S>> {
    check_counts(cfg, scheme, counts)?;
    Ok(SplitEvaluator::new(cfg, scheme).split(counts))
}

/// Precomputed constants for evaluating `W` and `R` on many count vectors
/// of the same experiment. Each evaluation is O(occupied cells).
#[derive(Debug, Clone)]
pub struct SplitEvaluator<'a, S: Scalar> {
    cfg: StatisticConfig<S>,
    scheme: &'a ClassificationScheme<S>,
    /// `1 / (g(2) E[P^-lambda])`
    w_coef: S,
    /// `n^(lambda+1) / (g(2) E[P^-lambda])`
    r_coef: S,
    /// `n E[P g(1/(nP))]`
    r_offset: S,
}

impl<'a, S: Scalar> SplitEvaluator<'a, S> {
    pub fn new(cfg: &StatisticConfig<S>, scheme: &'a ClassificationScheme<S>) -> Self {
        let n = S::from_count(cfg.n());
        let e_neg = scheme.moment(-cfg.lambda());
        let w_coef = S::one() / (cfg.g2() * e_neg);
        let r_coef = n.powf(cfg.lambda() + S::one()) * w_coef;
        let r_offset = normalization(cfg, scheme).center / n;
        Self { cfg: *cfg, scheme, w_coef, r_coef, r_offset }
    }

    pub fn config(&self) -> &StatisticConfig<S> {
        &self.cfg
    }

    /// Caller guarantees the counts match the scheme and `n`.
    pub fn split(&self, counts: &Counts) -> RepresentationSplit<S> {
        let cfg = &self.cfg;
        if self.scheme.is_uniform() {
            // p_j^-lambda / E[P^-lambda] = 1 and the sample term equals its mean.
            let mut w = CompensatedSum::new();
            for &(_, c) in counts.occupied() {
                w.add(cfg.g_unchecked(S::from_count(c)) / cfg.g2());
            }
            return RepresentationSplit { w_part: w.value(), r_part: S::zero() };
        }
        let n = S::from_count(cfg.n());
        let mut w = CompensatedSum::new();
        let mut sample = CompensatedSum::new();
        for &(j, c) in counts.occupied() {
            let p = self.scheme.prob(j);
            let c = S::from_count(c);
            w.add(p.powf(-cfg.lambda()) * cfg.g_unchecked(c));
            sample.add(c * p * cfg.g_unchecked(S::one() / (n * p)));
        }
        RepresentationSplit {
            w_part: self.w_coef * w.value(),
            r_part: self.r_coef * (sample.value() - self.r_offset),
        }
    }
}
