//! Exact Kolmogorov distance between an empirical sample and a reference
//! law, in the survival convention `sup_y |P(X >= y) - P(Z >= y)|`.

use serde::Serialize;

use super::reference::{normal_survival, poisson_survival_at};
use crate::error::{Error, Result};

/// Reference survival values below this are treated as the end of the
/// Poisson lattice.
pub const TAIL_CUTOFF: f64 = 1e-12;

/// Confidence level of the DKW half-width.
pub const DKW_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "law")]
pub enum Reference {
    Poisson { mu: f64 },
    Normal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KolmogorovReport {
    pub d_hat: f64,
    /// Candidate point where the supremum is attained.
    pub argmax_point: f64,
    /// The supremum is the limit from the right of `argmax_point`.
    pub attained_above: bool,
    /// Distribution-free 95% half-width for the empirical survival function.
    pub dkw_margin: f64,
    /// Upper bound on the reference mass beyond the last candidate.
    pub tail_truncation: f64,
    pub samples: usize,
    pub reference: Reference,
}

/// `sqrt(log(2 / alpha) / (2 N))` at `alpha = 0.05`.
pub fn dkw_margin(samples: usize) -> f64 {
    ((2.0 / DKW_ALPHA).ln() / (2.0 * samples as f64)).sqrt()
}

struct PoissonLattice {
    mu: f64,
    /// `P(Z >= k)` for `k = 0..=last + 1`
    survival: Vec<f64>,
}

impl PoissonLattice {
    fn new(mu: f64) -> Self {
        let mut survival = vec![1.0];
        let mut k = 0u64;
        while survival[k as usize] >= TAIL_CUTOFF {
            k += 1;
            survival.push(poisson_survival_at(mu, k));
        }
        // one step past the cutoff for the right limit at the last atom
        survival.push(poisson_survival_at(mu, k + 1));
        Self { mu, survival }
    }

    /// Largest lattice point kept as a candidate.
    fn last(&self) -> u64 {
        (self.survival.len() - 2) as u64
    }

    fn at(&self, k: u64) -> f64 {
        self.survival.get(k as usize).copied().unwrap_or_else(|| poisson_survival_at(self.mu, k))
    }

    /// `P(Z >= y)`
    fn survival(&self, y: f64) -> f64 {
        if y <= 0.0 {
            1.0
        } else {
            self.at(y.ceil() as u64)
        }
    }

    /// `P(Z > y)`
    fn survival_above(&self, y: f64) -> f64 {
        if y < 0.0 {
            1.0
        } else {
            self.at(y.floor() as u64 + 1)
        }
    }
}

fn merge_candidates(samples: &[f64], lattice: u64) -> Vec<f64> {
    let mut out = Vec::with_capacity(samples.len().min(1 << 20) + lattice as usize + 1);
    let mut atoms = samples.iter().copied().peekable();
    let mut ints = (0..=lattice).map(|k| k as f64).peekable();
    loop {
        let next = match (atoms.peek(), ints.peek()) {
            (Some(&a), Some(&b)) => {
                if a <= b {
                    atoms.next()
                } else {
                    ints.next()
                }
            }
            (Some(_), None) => atoms.next(),
            (None, Some(_)) => ints.next(),
            (None, None) => break,
        };
        let v = next.expect("peeked");
        if out.last() != Some(&v) {
            out.push(v);
        }
    }
    out
}

/// Evaluates both survival step functions at every candidate point and just
/// to its right. Between consecutive candidates both functions are constant,
/// so the maximum is the exact supremum up to `tail_truncation`.
pub fn empirical_dk(samples: &[f64], reference: Reference) -> Result<KolmogorovReport> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if samples.iter().any(|x| x.is_nan()) || !samples.windows(2).all(|w| w[0] <= w[1]) {
        return Err(Error::UnsortedSamples);
    }
    let total = samples.len() as f64;
    let empirical_at = |c: f64| (samples.len() - samples.partition_point(|&x| x < c)) as f64 / total;
    let empirical_above = |c: f64| (samples.len() - samples.partition_point(|&x| x <= c)) as f64 / total;

    let mut best = (0.0f64, samples[0], false);
    let mut consider = |c: f64, at: f64, above: f64| {
        let d_at = (empirical_at(c) - at).abs();
        if d_at > best.0 {
            best = (d_at, c, false);
        }
        let d_above = (empirical_above(c) - above).abs();
        if d_above > best.0 {
            best = (d_above, c, true);
        }
    };

    let tail_truncation = match reference {
        Reference::Poisson { mu } => {
            if !(mu >= 0.0) || !mu.is_finite() {
                return Err(Error::NegativeMean(mu));
            }
            let lattice = PoissonLattice::new(mu);
            let mut deduped = samples.to_vec();
            deduped.dedup();
            for c in merge_candidates(&deduped, lattice.last()) {
                consider(c, lattice.survival(c), lattice.survival_above(c));
            }
            lattice.at(lattice.last() + 1)
        }
        Reference::Normal => {
            let mut prev = None;
            for &c in samples {
                if prev == Some(c) {
                    continue;
                }
                prev = Some(c);
                let s = normal_survival(c);
                consider(c, s, s);
            }
            0.0
        }
    };

    Ok(KolmogorovReport {
        d_hat: best.0,
        argmax_point: best.1,
        attained_above: best.2,
        dkw_margin: dkw_margin(samples.len()),
        tail_truncation,
        samples: samples.len(),
        reference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_sample_against_poisson_one() {
        let r = empirical_dk(&[0.0, 1.0], Reference::Poisson { mu: 1.0 }).unwrap();
        let want = 1.0 - 2.0 * (-1.0f64).exp();
        assert!((r.d_hat - want).abs() < 1e-15);
        assert_eq!(r.argmax_point, 1.0);
        assert!(r.attained_above);
        assert!(r.tail_truncation <= 1e-12);
    }

    #[test]
    fn degenerate_reference() {
        let r = empirical_dk(&[0.0; 10], Reference::Poisson { mu: 0.0 }).unwrap();
        assert_eq!(r.d_hat, 0.0);
    }

    #[test]
    fn single_sample_uses_at_least_convention() {
        // Shat(1) = 1 for a single sample at 1, so the gap at y = 1 itself is
        // 1 - P(N >= 1) and is attained at the point, not to its right.
        let n = empirical_dk(&[1.0], Reference::Normal).unwrap();
        assert!((n.d_hat - (1.0 - normal_survival(1.0))).abs() < 1e-15);
        assert_eq!(n.argmax_point, 1.0);
        assert!(!n.attained_above);
        let p = empirical_dk(&[2.0], Reference::Poisson { mu: 0.0 }).unwrap();
        assert_eq!(p.d_hat, 1.0);
    }

    #[test]
    fn errors() {
        assert_eq!(empirical_dk(&[], Reference::Normal).unwrap_err(), Error::EmptySamples);
        assert_eq!(empirical_dk(&[1.0, 0.0], Reference::Normal).unwrap_err(), Error::UnsortedSamples);
        assert_eq!(empirical_dk(&[f64::NAN], Reference::Normal).unwrap_err(), Error::UnsortedSamples);
        assert!(matches!(empirical_dk(&[1.0], Reference::Poisson { mu: -0.5 }), Err(Error::NegativeMean(_))));
    }

    #[test]
    fn margin_values() {
        assert!((dkw_margin(1_000_000) - 0.001358).abs() < 1e-6);
        assert!(dkw_margin(1) > 1.0);
    }

    #[test]
    fn brute_force_grid_agrees() {
        // fine grid including points between lattice atoms never beats the candidate sup
        let samples = [0.0, 0.0, 0.5, 1.0, 1.0, 1.0, 2.5, 4.0];
        let mu = 1.3;
        let r = empirical_dk(&samples, Reference::Poisson { mu }).unwrap();
        let mut grid_sup = 0.0f64;
        for i in -200..2000 {
            let y = i as f64 * 0.005;
            let emp = samples.iter().filter(|&&x| x >= y).count() as f64 / samples.len() as f64;
            let s = if y <= 0.0 { 1.0 } else { poisson_survival_at(mu, y.ceil() as u64) };
            grid_sup = grid_sup.max((emp - s).abs());
        }
        assert!((r.d_hat - grid_sup).abs() < 1e-15);
    }
}
