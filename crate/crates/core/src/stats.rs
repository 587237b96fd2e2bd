//! Small descriptive statistics helpers.

use alloc::vec::Vec;

use crate::math;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance with divisor `n - 1`.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Empirical quantile of sorted data, linear interpolation between order
/// statistics (Hyndman–Fan type 7).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    assert!(n > 0, "quantile of empty data");
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = math::floor(h) as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Central `1 - alpha` percentile interval.
pub fn percentile_interval(xs: &[f64], alpha: f64) -> (f64, f64) {
    let s = sorted(xs);
    (
        quantile_sorted(&s, alpha / 2.0),
        quantile_sorted(&s, 1.0 - alpha / 2.0),
    )
}

/// Root mean squared deviation of `estimates` from `truth`.
pub fn rmse(estimates: &[f64], truth: f64) -> f64 {
    let ms = estimates.iter().map(|e| (e - truth) * (e - truth)).sum::<f64>()
        / estimates.len() as f64;
    math::sqrt(ms)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type7_quantiles() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile_sorted(&xs, 0.0), 1.0);
        assert_eq!(quantile_sorted(&xs, 1.0), 5.0);
        assert_eq!(quantile_sorted(&xs, 0.5), 3.0);
        assert!((quantile_sorted(&xs, 0.1) - 1.4).abs() < 1e-15);
    }

    #[test]
    fn rmse_of_single_estimate_is_abs_error() {
        assert!((rmse(&[1.3], 1.0) - 0.3).abs() < 1e-15);
        assert_eq!(rmse(&[2.0, 2.0], 2.0), 0.0);
    }
}
