//! Zero-inflated GEV generator, the misspecified truth of the tail
//! robustness study.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Open01};

use crate::error::{Error, Result};
use crate::gpd::XI_ZERO_TOL;
use crate::math;
use crate::rng;
use crate::ziegpd::Sample;

/// A ZIGEV draw together with the number of negative GEV draws that were
/// replaced.
#[derive(Debug, Clone, PartialEq)]
pub struct ZigevSample {
    pub sample: Sample,
    pub replaced: usize,
}

/// Draws `n` values: zero with probability `pi`, otherwise
/// `mu + (sigma/xi) ((-ln U)^(-xi) - 1)`. Negative GEV draws are replaced by
/// the smallest positive value of the same sample.
pub fn sample_zigev(n: usize, pi: f64, mu: f64, sigma: f64, xi: f64, seed: u64) -> Result<ZigevSample> {
    if n == 0 {
        return Err(Error::domain("n must be >= 1"));
    }
    if !(0.0..=1.0).contains(&pi) {
        return Err(Error::domain("pi must lie in [0, 1]"));
    }
    if !(sigma > 0.0 && sigma.is_finite()) || !mu.is_finite() || !xi.is_finite() {
        return Err(Error::domain("mu and xi must be finite, sigma > 0"));
    }
    let mut rng = rng::stream(seed);
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        let zero: f64 = rng.random();
        if zero < pi {
            values.push(0.0);
            continue;
        }
        let u: f64 = Open01.sample(&mut rng);
        let e = -math::ln(u);
        let x = if math::abs(xi) < XI_ZERO_TOL {
            mu - sigma * math::ln(e)
        } else {
            // (e^(-xi) - 1) / xi
            mu + sigma * math::exp_m1(-xi * math::ln(e)) / xi
        };
        values.push(x);
    }

    let floor = values
        .iter()
        .copied()
        .filter(|v| *v > 0.0)
        .fold(f64::INFINITY, f64::min);
    let mut replaced = 0;
    for v in values.iter_mut().filter(|v| **v < 0.0) {
        // with no positive draw at all there is nothing to borrow
        *v = if floor.is_finite() { floor } else { 0.0 };
        replaced += 1;
    }
    Ok(ZigevSample {
        sample: Sample::with_seed(values, seed)?,
        replaced,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_zero_when_pi_is_one() {
        let s = sample_zigev(100, 1.0, 2.0, 1.0, 0.2, 1).unwrap().sample;
        assert_eq!(s.zero_count(), 100);
    }

    #[test]
    fn gev_cdf_at_location() {
        let s = sample_zigev(200_000, 0.0, 2.0, 1.0, 0.2, 2).unwrap().sample;
        let below = s.values().iter().filter(|v| **v <= 2.0).count() as f64 / 200_000.0;
        let target = (-1.0f64).exp();
        let se = (target * (1.0 - target) / 200_000.0).sqrt();
        assert!((below - target).abs() < 4.0 * se, "{below}");
    }

    #[test]
    fn zero_fraction_binomial() {
        let n = 100_000;
        let s = sample_zigev(n, 0.4, 2.0, 1.0, 0.2, 3).unwrap().sample;
        let se = (0.4f64 * 0.6 / n as f64).sqrt();
        assert!((s.zero_fraction() - 0.4).abs() < 3.0 * se);
    }

    #[test]
    fn negatives_take_sample_minimum() {
        // a low location makes negatives common
        let z = sample_zigev(2000, 0.1, 0.0, 1.0, 0.2, 4).unwrap();
        assert!(z.replaced > 0);
        let min_pos = z
            .sample
            .positives()
            .fold(f64::INFINITY, f64::min);
        let at_min = z.sample.positives().filter(|v| *v == min_pos).count();
        assert!(at_min > z.replaced);
        assert!(z.sample.values().iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn deterministic() {
        let a = sample_zigev(50, 0.3, 2.0, 1.0, 0.2, 9).unwrap();
        let b = sample_zigev(50, 0.3, 2.0, 1.0, 0.2, 9).unwrap();
        assert_eq!(a, b);
    }
}
