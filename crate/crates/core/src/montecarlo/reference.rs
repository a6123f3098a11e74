//! Survival functions `P(Z >= y)` of the reference laws.

use crate::error::{Error, Result};
use crate::scalar::CompensatedSum;

/// Relative size below which a further series term is dropped.
const SERIES_EPS: f64 = 1e-18;

/// Poisson probability mass `e^-mu mu^k / k!`.
pub fn poisson_pmf(mu: f64, k: u64) -> f64 {
    if mu == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if mu < 500.0 && k < 1000 {
        // short forward recurrence from pmf(0)
        let mut p = (-mu).exp();
        for j in 1..=k {
            p *= mu / j as f64;
        }
        return p;
    }
    let k = k as f64;
    (k * mu.ln() - mu - libm::lgamma(k + 1.0)).exp()
}

/// `P(Z >= k)` for integer `k`. Sums whichever side of the mean is the tail
/// so both small and large survival values keep relative precision.
pub(crate) fn poisson_survival_at(mu: f64, k: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if mu == 0.0 {
        return 0.0;
    }
    if k as f64 > mu {
        // upper tail: terms decrease from pmf(k) onwards
        let mut term = poisson_pmf(mu, k);
        let mut acc = CompensatedSum::new();
        let mut j = k;
        while term > 0.0 {
            acc.add(term);
            j += 1;
            term *= mu / j as f64;
            if term < acc.value() * SERIES_EPS {
                break;
            }
        }
        acc.value()
    } else {
        // 1 - P(Z <= k-1), summing downwards from k-1 where terms shrink
        let mut j = k - 1;
        let mut term = poisson_pmf(mu, j);
        let mut acc = CompensatedSum::new();
        loop {
            acc.add(term);
            if j == 0 {
                break;
            }
            term *= j as f64 / mu;
            j -= 1;
            if term < acc.value() * SERIES_EPS {
                break;
            }
        }
        (1.0 - acc.value()).max(0.0)
    }
}

/// `P(Z >= y)` for `Z ~ Poisson(mu)`; equal to 1 for `y <= 0`.
pub fn poisson_survival(mu: f64, y: f64) -> Result<f64> {
    if !(mu >= 0.0) || !mu.is_finite() {
        return Err(Error::NegativeMean(mu));
    }
    if y <= 0.0 {
        return Ok(1.0);
    }
    if y.is_infinite() {
        return Ok(0.0);
    }
    Ok(poisson_survival_at(mu, y.ceil() as u64))
}

/// `P(N >= y)` for a standard normal `N`.
pub fn normal_survival(y: f64) -> f64 {
    0.5 * libm::erfc(y / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_examples() {
        let e1 = (-1.0f64).exp();
        assert!((poisson_survival(1.0, 1.0).unwrap() - (1.0 - e1)).abs() < 1e-15);
        for mu in [0.0, 0.3, 4.0, 900.0] {
            assert_eq!(poisson_survival(mu, 0.0).unwrap(), 1.0);
            assert_eq!(poisson_survival(mu, -2.5).unwrap(), 1.0);
        }
        let mu = 0.033f64;
        let want = 1.0 - (-mu).exp() * (1.0 + mu);
        let got = poisson_survival(mu, 2.0).unwrap();
        assert!((got - want).abs() < 1e-16);
        assert!((got - 5.35e-4).abs() < 5e-6);
        // non-integer y rounds up
        assert_eq!(poisson_survival(2.0, 1.2).unwrap(), poisson_survival(2.0, 2.0).unwrap());
        assert!(matches!(poisson_survival(-1.0, 1.0), Err(Error::NegativeMean(_))));
        assert_eq!(poisson_survival(0.0, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn poisson_differences_are_pmf() {
        for mu in [0.003, 0.5742, 1.0, 5.0, 37.5] {
            let mut prev = 1.0;
            for k in 0..120u64 {
                let s = poisson_survival(mu, k as f64).unwrap();
                let s1 = poisson_survival(mu, k as f64 + 1.0).unwrap();
                assert!(s <= prev);
                prev = s;
                assert!((s - s1 - poisson_pmf(mu, k)).abs() <= 1e-14, "mu {mu} k {k}");
            }
        }
    }

    #[test]
    fn large_mean_uses_log_pmf() {
        let mu = 2000.0;
        let s = poisson_survival(mu, mu).unwrap();
        assert!(s > 0.49 && s < 0.51);
        assert!((poisson_pmf(mu, 2000) - 0.008_920).abs() < 1e-5);
    }

    #[test]
    fn normal_examples() {
        assert_eq!(normal_survival(0.0), 0.5);
        assert!(normal_survival(40.0) < 1e-300);
        assert!((normal_survival(1.959964) - 0.025).abs() < 1e-6);
        assert!((normal_survival(-1.959964) - 0.975).abs() < 1e-6);
        // 1 - Phi(1) = 0.15865525393145705
        assert!((normal_survival(1.0) - 0.158_655_253_931_457_05).abs() < 1e-15);
    }
}
