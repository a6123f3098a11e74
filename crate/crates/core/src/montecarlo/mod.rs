//! Monte Carlo experiments: multinomial sampling, per-replicate statistics
//! and empirical Kolmogorov distances.
//!
//! Replicate `i` of an experiment with seed `s` always draws from the ChaCha8
//! stream `(s, i)`, so results do not depend on how replicates are spread
//! over worker threads.

mod kolmogorov;
mod reference;

use std::fmt;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::Serialize;

pub use kolmogorov::{dkw_margin, empirical_dk, KolmogorovReport, Reference, DKW_ALPHA, TAIL_CUTOFF};
pub use reference::{normal_survival, poisson_pmf, poisson_survival};

use crate::error::{Error, Result};
use crate::scheme::{ClassificationScheme, SchemeDescriptor};
use crate::statistic::{Counts, SplitEvaluator, StatisticConfig};

/// Draws cell indices from a scheme: direct integer sampling for uniform
/// schemes, an alias table (O(r) setup, O(1) per draw) otherwise.
#[derive(Debug, Clone)]
pub enum CellSampler {
    Uniform { r: u64 },
    Alias(WeightedAliasIndex<f64>),
}

impl CellSampler {
    pub fn new(scheme: &ClassificationScheme<f64>) -> Result<Self> {
        if scheme.is_uniform() {
            return Ok(Self::Uniform { r: scheme.r() as u64 });
        }
        WeightedAliasIndex::new(scheme.to_vec())
            .map(Self::Alias)
            .map_err(|e| Error::AliasTable(e.to_string()))
    }

    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match self {
            Self::Uniform { r } => rng.random_range(0..*r) as usize,
            Self::Alias(table) => table.sample(rng),
        }
    }

    /// `n` draws aggregated into sparse counts; `buf` is scratch space.
    pub fn sample_counts_into<R: Rng + ?Sized>(&self, r: usize, n: u64, rng: &mut R, buf: &mut Vec<usize>) -> Counts {
        buf.clear();
        buf.extend((0..n).map(|_| self.draw(rng)));
        buf.sort_unstable();
        Counts::from_sorted_cells(r, buf)
    }
}

/// The RNG for one replicate.
pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

/// `n` categorical draws from `scheme`, as sparse counts.
pub fn sample_counts<R: Rng + ?Sized>(scheme: &ClassificationScheme<f64>, n: u64, rng: &mut R) -> Result<Counts> {
    let sampler = CellSampler::new(scheme)?;
    let mut buf = Vec::with_capacity(n as usize);
    Ok(sampler.sample_counts_into(scheme.r(), n, rng, &mut buf))
}

/// Quantity recorded per replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// The normalised statistic `T~_lambda`.
    TTilde,
    /// Number of cells holding exactly `m` observations.
    Occupancy(u64),
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::TTilde => f.write_str("t_tilde"),
            Self::Occupancy(m) => write!(f, "occupancy_{m}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scheme: SchemeDescriptor<f64>,
    pub n: u64,
    pub lambda: f64,
    pub replicates: u64,
    pub seed: u64,
    pub targets: Vec<Target>,
}

/// Per-replicate values, in replicate order, one column per target.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateBatch {
    targets: Vec<Target>,
    replicates: usize,
    /// row-major `replicates x targets.len()`
    values: Vec<f64>,
}

impl ReplicateBatch {
    pub fn targets(&self) -> &[Target] {
        &self.targets
    }

    pub fn replicates(&self) -> usize {
        self.replicates
    }

    pub fn column(&self, target: Target) -> Option<Vec<f64>> {
        let k = self.targets.iter().position(|&t| t == target)?;
        let width = self.targets.len();
        Some(self.values.iter().skip(k).step_by(width).copied().collect())
    }

    /// Column sorted ascending, ready for [`empirical_dk`].
    pub fn sorted(&self, target: Target) -> Option<Vec<f64>> {
        let mut col = self.column(target)?;
        col.sort_unstable_by(f64::total_cmp);
        Some(col)
    }

    /// CSV dump: header `replicate,<target>...`, one row per replicate,
    /// values in shortest round-trip form.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "replicate")?;
        for t in &self.targets {
            write!(w, ",{t}")?;
        }
        writeln!(w)?;
        let width = self.targets.len().max(1);
        for (i, row) in self.values.chunks(width).enumerate() {
            write!(w, "{i}")?;
            for v in row {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Runs the experiment on the current rayon pool.
pub fn simulate(config: &ExperimentConfig) -> Result<ReplicateBatch> {
    if config.replicates == 0 {
        return Err(Error::NoReplicates);
    }
    let scheme = ClassificationScheme::build(config.scheme.clone())?;
    let sampler = CellSampler::new(&scheme)?;
    let wants_t = config.targets.contains(&Target::TTilde);
    let stat_cfg = if wants_t { Some(StatisticConfig::new(config.lambda, config.n)?) } else { None };
    let evaluator = stat_cfg.as_ref().map(|c| SplitEvaluator::new(c, &scheme));

    let width = config.targets.len();
    let replicates = config.replicates as usize;
    let mut values = vec![0.0f64; replicates * width];
    if width > 0 {
        let r = scheme.r();
        values.par_chunks_mut(width).enumerate().for_each_init(
            || Vec::with_capacity(config.n as usize),
            |buf, (i, row)| {
                let mut rng = replicate_rng(config.seed, i as u64);
                let counts = sampler.sample_counts_into(r, config.n, &mut rng, buf);
                for (slot, target) in row.iter_mut().zip(&config.targets) {
                    *slot = match target {
                        Target::TTilde => evaluator.as_ref().expect("built when requested").split(&counts).total(),
                        Target::Occupancy(m) => counts.occupancy(*m) as f64,
                    };
                }
            },
        );
    }
    Ok(ReplicateBatch { targets: config.targets.clone(), replicates, values })
}

/// Runs the experiment on a dedicated pool of `workers` threads.
pub fn simulate_with_workers(config: &ExperimentConfig, workers: usize) -> Result<ReplicateBatch> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| simulate(config))
}
