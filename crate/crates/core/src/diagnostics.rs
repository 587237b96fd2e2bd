//! Goodness-of-fit data: QQ pairs for the positive part, empirical versus
//! model CDF on a grid, and the Kolmogorov–Smirnov distance.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::math;
use crate::stats;
use crate::ziegpd::{Sample, ZiegpdParams};

/// Plotting position for the `i`-th of `m` order statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PlottingPosition {
    /// `i / (m + 1)`
    #[default]
    Weibull,
    /// `(i - 0.5) / m`
    Hazen,
}

impl PlottingPosition {
    pub fn at(&self, i: usize, m: usize) -> f64 {
        match self {
            PlottingPosition::Weibull => i as f64 / (m as f64 + 1.0),
            PlottingPosition::Hazen => (i as f64 - 0.5) / m as f64,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            PlottingPosition::Weibull => "weibull",
            PlottingPosition::Hazen => "hazen",
        }
    }
}

impl fmt::Display for PlottingPosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PlottingPosition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "weibull" => Ok(PlottingPosition::Weibull),
            "hazen" => Ok(PlottingPosition::Hazen),
            _ => Err(Error::Domain(alloc::format!("unknown plotting position {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QqPoint {
    pub empirical: f64,
    pub model: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QqData {
    pub points: Vec<QqPoint>,
    pub positions: PlottingPosition,
}

impl QqData {
    /// Least-squares slope of model on empirical quantiles.
    pub fn slope(&self) -> f64 {
        let xs: Vec<f64> = self.points.iter().map(|p| p.empirical).collect();
        let ys: Vec<f64> = self.points.iter().map(|p| p.model).collect();
        let (mx, my) = (stats::mean(&xs), stats::mean(&ys));
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for (x, y) in xs.iter().zip(&ys) {
            sxy += (x - mx) * (y - my);
            sxx += (x - mx) * (x - mx);
        }
        sxy / sxx
    }
}

/// QQ pairs for the positive observations: the `i`-th smallest positive
/// against the model quantile at `pi + (1 - pi) p_i`.
pub fn qq_data(data: &Sample, theta: &ZiegpdParams, positions: PlottingPosition) -> Result<QqData> {
    let positives = stats::sorted(&data.positives().collect::<Vec<_>>());
    let m = positives.len();
    if m < 2 {
        return Err(Error::InsufficientData(alloc::format!(
            "QQ data needs at least 2 positive observations, got {m}"
        )));
    }
    let pi = theta.pi();
    let points = positives
        .iter()
        .enumerate()
        .map(|(k, &z)| {
            let p = pi + (1.0 - pi) * positions.at(k + 1, m);
            Ok(QqPoint {
                empirical: z,
                model: theta.quantile(p)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(QqData { points, positions })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdfPoint {
    pub z: f64,
    pub empirical: f64,
    pub model: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CdfCompareData {
    pub points: Vec<CdfPoint>,
}

impl CdfCompareData {
    /// Largest absolute gap between the two columns on the grid.
    pub fn max_gap(&self) -> f64 {
        self.points
            .iter()
            .map(|p| math::abs(p.empirical - p.model))
            .fold(0.0, f64::max)
    }
}

/// Fraction of `sorted` at or below `z`.
fn ecdf(sorted: &[f64], z: f64) -> f64 {
    sorted.partition_point(|v| *v <= z) as f64 / sorted.len() as f64
}

/// Empirical (all observations, zeros included) and model CDF on
/// `grid_size` equally spaced points spanning `[0, max(data)]`.
pub fn cdf_compare_data(data: &Sample, theta: &ZiegpdParams, grid_size: usize) -> Result<CdfCompareData> {
    if grid_size < 10 {
        return Err(Error::domain("grid_size must be >= 10"));
    }
    if data.is_empty() {
        return Err(Error::domain("data must be nonempty"));
    }
    let sorted = stats::sorted(data.values());
    let max = sorted[sorted.len() - 1];
    // an all-zero sample still gets a nondegenerate grid
    let top = if max > 0.0 { max } else { 1.0 };
    let points = (0..grid_size)
        .map(|k| {
            let z = if k + 1 == grid_size {
                top
            } else {
                top * k as f64 / (grid_size - 1) as f64
            };
            Ok(CdfPoint {
                z,
                empirical: ecdf(&sorted, z),
                model: theta.cdf(z)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CdfCompareData { points })
}

/// `sup_z |F_n(z) - F(z)|` over the whole line, accounting for the atom at
/// zero (the model CDF is continuous elsewhere).
pub fn ks_statistic(data: &Sample, theta: &ZiegpdParams) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::domain("data must be nonempty"));
    }
    let sorted = stats::sorted(data.values());
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let x = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == x {
            j += 1;
        }
        let f = theta.cdf(x)?;
        let f_left = if x > 0.0 { f } else { 0.0 };
        d = d
            .max(math::abs(j as f64 / n - f))
            .max(math::abs(i as f64 / n - f_left));
        i = j;
    }
    Ok(d)
}

/// Asymptotic two-sided KS critical value `sqrt(-ln(alpha/2) / 2) / sqrt(n)`.
pub fn ks_critical_value(n: usize, alpha: f64) -> f64 {
    math::sqrt(-math::ln(alpha / 2.0) / 2.0) / math::sqrt(n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn theta() -> ZiegpdParams {
        ZiegpdParams::m1(0.3, 2.0, 1.5, 0.2).unwrap()
    }

    #[test]
    fn qq_self_consistency() {
        let t = theta();
        let data = t.sample(10_000, 1).unwrap();
        let qq = qq_data(&data, &t, PlottingPosition::Weibull).unwrap();
        let slope = qq.slope();
        assert!((0.9..=1.1).contains(&slope), "{slope}");
        assert!(qq.points.windows(2).all(|w| w[0].empirical <= w[1].empirical));
    }

    #[test]
    fn qq_needs_two_positives() {
        let data = Sample::new(vec![0.0, 0.0, 1.0]).unwrap();
        assert!(qq_data(&data, &theta(), PlottingPosition::Weibull).is_err());
    }

    #[test]
    fn qq_constant_positives() {
        let data = Sample::new(vec![0.0, 2.5, 2.5, 2.5]).unwrap();
        let qq = qq_data(&data, &theta(), PlottingPosition::Hazen).unwrap();
        assert!(qq.points.iter().all(|p| p.empirical == 2.5));
    }

    #[test]
    fn cdf_atom_matches_zero_fraction() {
        let t = theta();
        let data = t.sample(500, 2).unwrap();
        let c = cdf_compare_data(&data, &t, 10).unwrap();
        assert_eq!(c.points[0].z, 0.0);
        assert_eq!(c.points[0].empirical, data.zero_fraction());
        assert_eq!(c.points[0].model, t.pi());
        assert_eq!(c.points.last().unwrap().empirical, 1.0);
        assert!(c.points.windows(2).all(|w| w[0].model <= w[1].model));
        assert!(cdf_compare_data(&data, &t, 9).is_err());
    }

    #[test]
    fn ks_on_own_draws() {
        let t = theta();
        let data = t.sample(5_000, 3).unwrap();
        let d = ks_statistic(&data, &t).unwrap();
        assert!(d < ks_critical_value(5_000, 0.01), "{d}");
        let wrong = ZiegpdParams::m1(0.3, 2.0, 3.0, 0.2).unwrap();
        assert!(ks_statistic(&data, &wrong).unwrap() > ks_critical_value(5_000, 0.01));
    }

    #[test]
    fn critical_value_formula() {
        assert!((ks_critical_value(1, 0.01) - 1.6276).abs() < 1e-4);
    }
}
