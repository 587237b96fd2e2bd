//! The zero-inflated extended GPD: mass `pi` at zero, and
//! `(1 - pi) W(H(z))` for the positive part.

use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use rand_distr::{Distribution, Open01};

use crate::carrier::{CarrierFamily, Model, UnitPoint};
use crate::error::{Error, Result};
use crate::gpd::GpdParams;
use crate::math;
use crate::rng;

/// Named model parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Param {
    Pi,
    Kappa,
    Delta,
    Sigma,
    Xi,
}

impl Param {
    pub fn as_str(&self) -> &'static str {
        match self {
            Param::Pi => "pi",
            Param::Kappa => "kappa",
            Param::Delta => "delta",
            Param::Sigma => "sigma",
            Param::Xi => "xi",
        }
    }

    /// Parameters of `model`, in reporting order.
    pub fn for_model(model: Model) -> &'static [Param] {
        match model {
            Model::M1 => &[Param::Pi, Param::Kappa, Param::Sigma, Param::Xi],
            Model::M2 => &[Param::Pi, Param::Delta, Param::Sigma, Param::Xi],
            Model::M3 => &[Param::Pi, Param::Kappa, Param::Delta, Param::Sigma, Param::Xi],
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Full parameter vector `(pi, carrier, sigma, xi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZiegpdParams {
    pi: f64,
    carrier: CarrierFamily,
    gpd: GpdParams,
}

impl ZiegpdParams {
    pub fn new(pi: f64, carrier: CarrierFamily, gpd: GpdParams) -> Result<Self> {
        if !(0.0..=1.0).contains(&pi) {
            return Err(Error::domain("pi must lie in [0, 1]"));
        }
        carrier.validate()?;
        Ok(Self { pi, carrier, gpd })
    }

    pub fn m1(pi: f64, kappa: f64, sigma: f64, xi: f64) -> Result<Self> {
        Self::new(pi, CarrierFamily::M1 { kappa }, GpdParams::new(sigma, xi)?)
    }

    pub fn m2(pi: f64, delta: f64, sigma: f64, xi: f64) -> Result<Self> {
        Self::new(pi, CarrierFamily::M2 { delta }, GpdParams::new(sigma, xi)?)
    }

    pub fn m3(pi: f64, delta: f64, kappa: f64, sigma: f64, xi: f64) -> Result<Self> {
        Self::new(pi, CarrierFamily::M3 { delta, kappa }, GpdParams::new(sigma, xi)?)
    }

    pub fn pi(&self) -> f64 {
        self.pi
    }

    pub fn carrier(&self) -> CarrierFamily {
        self.carrier
    }

    pub fn gpd(&self) -> GpdParams {
        self.gpd
    }

    pub fn model(&self) -> Model {
        self.carrier.model()
    }

    pub fn get(&self, param: Param) -> Option<f64> {
        match param {
            Param::Pi => Some(self.pi),
            Param::Kappa => self.carrier.kappa(),
            Param::Delta => self.carrier.delta(),
            Param::Sigma => Some(self.gpd.sigma()),
            Param::Xi => Some(self.gpd.xi()),
        }
    }

    /// Same carrier and shape with the scale multiplied by `c`.
    pub fn rescaled(&self, c: f64) -> Result<Self> {
        Self::new(
            self.pi,
            self.carrier,
            GpdParams::new(self.gpd.sigma() * c, self.gpd.xi())?,
        )
    }

    /// `ln` of the positive-part density `d/dz W(H(z))` for `z > 0`.
    ///
    /// Closed forms, with `t = (1 + xi z / sigma)^(-1/xi)`:
    /// * M1: `(kappa / sigma) (1 - t)^(kappa - 1) t^(1 + xi)`
    /// * M2: `(1 / sigma) (1 + 1/delta - ((1 + delta) / delta) t^delta) t^(1 + xi)`
    /// * M3: `(kappa / (2 sigma)) [1 - t + t^(delta + 1) / delta - t / delta]^(kappa/2 - 1)`
    ///   `x (1 + 1/delta - ((1 + delta) / delta) t^delta) t^(1 + xi)`
    #[inline]
    pub(crate) fn ln_positive_density(&self, z: f64) -> f64 {
        ln_positive_density(&self.carrier, &self.gpd, z)
    }

    fn check_z(z: f64) -> Result<()> {
        if z >= 0.0 && !z.is_nan() {
            Ok(())
        } else {
            Err(Error::domain("z must be >= 0"))
        }
    }

    /// Mixed-measure density: the atom mass `pi` at `z = 0`, the Lebesgue
    /// density `(1 - pi) d/dz W(H(z))` for `z > 0`.
    pub fn pdf(&self, z: f64) -> Result<f64> {
        Self::check_z(z)?;
        if z == 0.0 {
            return Ok(self.pi);
        }
        Ok((1.0 - self.pi) * math::exp(self.ln_positive_density(z)))
    }

    pub fn cdf(&self, z: f64) -> Result<f64> {
        Self::check_z(z)?;
        if z == 0.0 {
            return Ok(self.pi);
        }
        let point = UnitPoint::from_ln_s(self.gpd.ln_sf_unchecked(z));
        Ok(self.pi + (1.0 - self.pi) * self.carrier.cdf_at(&point))
    }

    /// `P(Z > z)` for `z >= 0`, accurate in the far tail.
    pub fn sf(&self, z: f64) -> Result<f64> {
        Self::check_z(z)?;
        let point = UnitPoint::from_ln_s(self.gpd.ln_sf_unchecked(z));
        if z == 0.0 {
            return Ok(1.0 - self.pi);
        }
        Ok((1.0 - self.pi) * self.carrier.sf_at(&point))
    }

    /// Quantile for `p` in `[0, 1)`; zero for `p <= pi`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::domain("p must lie in [0, 1)"));
        }
        if p <= self.pi {
            return Ok(0.0);
        }
        if self.pi >= 1.0 {
            return Err(Error::domain("no positive part when pi = 1"));
        }
        let p_star = (p - self.pi) / (1.0 - self.pi);
        let point = self.carrier.quantile_point(p_star)?;
        Ok(self.gpd.quantile_from_ln_sf(point.ln_s))
    }

    /// Level exceeded with probability `1 / period`.
    pub fn return_level(&self, period: f64) -> Result<f64> {
        if !(period > 1.0) || !period.is_finite() {
            return Err(Error::domain("return period must be finite and > 1"));
        }
        let p = 1.0 - 1.0 / period;
        if p <= self.pi {
            return Err(Error::ReturnLevelUndefined {
                period,
                pi: self.pi,
            });
        }
        self.quantile(p)
    }

    /// Draws `n` values: zero with probability `pi`, otherwise
    /// `H^{-1}(W^{-1}(U))`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Sample> {
        if n == 0 {
            return Err(Error::domain("n must be >= 1"));
        }
        let mut rng = rng::stream(seed);
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            let zero: f64 = rng.random();
            if zero < self.pi {
                values.push(0.0);
                continue;
            }
            let u: f64 = Open01.sample(&mut rng);
            let point = self.carrier.quantile_point(u)?;
            values.push(self.gpd.quantile_from_ln_sf(point.ln_s));
        }
        Sample::with_seed(values, seed)
    }

    /// Log-likelihood with the zeros contributing `ln pi` and the positives
    /// `ln(1 - pi) + ln` density. Returns `-inf` when the data are impossible
    /// under `pi` (zeros with `pi = 0`, positives with `pi = 1`).
    pub fn loglik(&self, data: &Sample) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::domain("data must be nonempty"));
        }
        let n0 = data.zero_count();
        let n1 = data.positive_count();
        if (self.pi == 0.0 && n0 > 0) || (self.pi == 1.0 && n1 > 0) {
            return Ok(f64::NEG_INFINITY);
        }
        let mut ll = 0.0;
        if n0 > 0 {
            ll += n0 as f64 * math::ln(self.pi);
        }
        if n1 > 0 {
            ll += n1 as f64 * math::ln_1p(-self.pi);
            ll += data.positives().map(|z| self.ln_positive_density(z)).sum::<f64>();
        }
        Ok(ll)
    }
}

#[inline]
pub(crate) fn ln_positive_density(carrier: &CarrierFamily, gpd: &GpdParams, z: f64) -> f64 {
    let point = UnitPoint::from_ln_s(gpd.ln_sf_unchecked(z));
    carrier.ln_pdf_at(&point) + gpd.ln_pdf_unchecked(z)
}

/// Observations (mm/day). `seed` is the generating seed, 0 for observed data.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
    zero_count: usize,
    seed: u64,
}

impl Sample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_seed(values, 0)
    }

    pub fn with_seed(values: Vec<f64>, seed: u64) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Domain(alloc::format!(
                "observations must be finite and >= 0, got {bad}"
            )));
        }
        let zero_count = values.iter().filter(|v| **v == 0.0).count();
        Ok(Self {
            values,
            zero_count,
            seed,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn zero_count(&self) -> usize {
        self.zero_count
    }

    pub fn positive_count(&self) -> usize {
        self.values.len() - self.zero_count
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn positives(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().copied().filter(|v| *v > 0.0)
    }

    /// `zero_count / n`.
    pub fn zero_fraction(&self) -> f64 {
        self.zero_count as f64 / self.values.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn peshawar_m1() -> ZiegpdParams {
        ZiegpdParams::m1(0.5999, 0.4568, 4.9095, 0.3281).unwrap()
    }

    #[test]
    fn pdf_examples() {
        let th = ZiegpdParams::m1(0.6, 1.0, 1.0, 0.5).unwrap();
        assert_eq!(th.pdf(0.0).unwrap(), 0.6);
        assert!((th.pdf(2.0).unwrap() - 0.05).abs() < 1e-15);
        let th = ZiegpdParams::m1(0.5, 2.0, 1.0, 0.0).unwrap();
        let e1 = (-1.0f64).exp();
        let expect = 0.5 * 2.0 * (1.0 - e1) * e1;
        assert!((th.pdf(1.0).unwrap() - expect).abs() < 1e-15);
        assert!((th.pdf(1.0).unwrap() - 0.232544).abs() < 1e-6);
        assert!(th.pdf(-1.0).is_err());
    }

    #[test]
    fn closed_forms_match_chain_rule() {
        // closed-form per-family densities against W'(H(z)) h(z)
        let cases = [
            ZiegpdParams::m1(0.3, 2.5, 1.5, 0.3).unwrap(),
            ZiegpdParams::m2(0.3, 3.0, 1.5, 0.3).unwrap(),
            ZiegpdParams::m3(0.3, 3.0, 5.0, 1.5, 0.3).unwrap(),
        ];
        for th in cases {
            let (sigma, xi) = (th.gpd().sigma(), th.gpd().xi());
            for i in 1..100 {
                let z = i as f64 * 0.1;
                let t = (1.0 + xi * z / sigma).powf(-1.0 / xi);
                let tail = (1.0 + xi * z / sigma).powf(-1.0 / xi - 1.0);
                let direct = match th.carrier() {
                    CarrierFamily::M1 { kappa } => {
                        kappa / sigma * (1.0 - t).powf(kappa - 1.0) * tail
                    }
                    CarrierFamily::M2 { delta } => {
                        (1.0 + 1.0 / delta - (delta + 1.0) / delta * t.powf(delta)) * tail / sigma
                    }
                    CarrierFamily::M3 { delta, kappa } => {
                        let w2 = 1.0 - t + t.powf(delta + 1.0) / delta - t / delta;
                        kappa / (2.0 * sigma)
                            * w2.powf(kappa / 2.0 - 1.0)
                            * (1.0 + 1.0 / delta - (delta + 1.0) / delta * t.powf(delta))
                            * tail
                    }
                };
                let chain = th.carrier().pdf(th.gpd().cdf(z).unwrap()).unwrap()
                    * th.gpd().pdf(z).unwrap();
                let ours = th.pdf(z).unwrap() / (1.0 - th.pi());
                assert!((ours - direct).abs() < 1e-12 * direct.max(1e-300), "{th:?} z={z}");
                assert!((ours - chain).abs() < 1e-12 * chain, "{th:?} z={z}");
            }
        }
    }

    #[test]
    fn cdf_examples() {
        let th = peshawar_m1();
        assert_eq!(th.cdf(0.0).unwrap(), th.pi());
        assert!((th.cdf(4.2433).unwrap() - 0.9).abs() < 1e-3);
        let th = ZiegpdParams::m1(0.3, 2.0, 1.0, 0.2).unwrap();
        assert!((th.cdf(1e8).unwrap() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn quantile_examples() {
        let th = ZiegpdParams::m1(0.6, 2.0, 1.0, 0.3).unwrap();
        assert_eq!(th.quantile(0.5).unwrap(), 0.0);
        let th = peshawar_m1();
        assert!((th.quantile(0.9).unwrap() - 4.2433).abs() < 0.01);
        assert!((th.quantile(0.95).unwrap() - 8.5123).abs() < 0.02);
        assert!(th.quantile(1.0).is_err());
        let all_zero = ZiegpdParams::m1(1.0, 2.0, 1.0, 0.3).unwrap();
        assert_eq!(all_zero.quantile(0.99).unwrap(), 0.0);
    }

    #[test]
    fn return_level_examples() {
        assert!((peshawar_m1().return_level(10.0).unwrap() - 4.2433).abs() < 0.01);
        let mardan = ZiegpdParams::m1(0.6075, 0.3989, 5.7098, 0.3703).unwrap();
        assert!((mardan.return_level(5.0).unwrap() - 1.0843).abs() < 0.01);
        let bannu = ZiegpdParams::m1(0.6450, 0.4772, 3.6156, 0.2681).unwrap();
        assert!((bannu.return_level(20.0).unwrap() - 5.6242).abs() < 0.02);
        assert!(matches!(
            peshawar_m1().return_level(2.0),
            Err(Error::ReturnLevelUndefined { .. })
        ));
        assert!(peshawar_m1().return_level(1.0).is_err());
    }

    #[test]
    fn loglik_examples() {
        let th = ZiegpdParams::m1(0.5, 2.0, 1.0, 0.2).unwrap();
        let zeros = Sample::new(alloc::vec![0.0; 10]).unwrap();
        assert!((th.loglik(&zeros).unwrap() - 10.0 * 0.5f64.ln()).abs() < 1e-12);

        let th = ZiegpdParams::m1(0.6, 1.0, 1.0, 0.5).unwrap();
        let data = Sample::new(alloc::vec![0.0, 2.0]).unwrap();
        let ll = th.loglik(&data).unwrap();
        assert!((ll - (0.6f64.ln() + 0.05f64.ln())).abs() < 1e-12);
        assert!((ll - (-3.506558)).abs() < 1e-6);

        let product: f64 = data.values().iter().map(|z| th.pdf(*z).unwrap()).product();
        assert!((ll.exp() / product - 1.0).abs() < 1e-10);
    }

    #[test]
    fn loglik_impossible_data() {
        let data = Sample::new(alloc::vec![0.0, 1.0]).unwrap();
        let th0 = ZiegpdParams::m1(0.0, 1.0, 1.0, 0.5).unwrap();
        assert_eq!(th0.loglik(&data).unwrap(), f64::NEG_INFINITY);
        let th1 = ZiegpdParams::m1(1.0, 1.0, 1.0, 0.5).unwrap();
        assert_eq!(th1.loglik(&data).unwrap(), f64::NEG_INFINITY);
        let positives = Sample::new(alloc::vec![1.0, 2.0]).unwrap();
        assert!(th0.loglik(&positives).unwrap().is_finite());
    }

    #[test]
    fn sampling_is_seeded() {
        let th = ZiegpdParams::m3(0.4, 2.0, 3.0, 1.0, 0.2).unwrap();
        let a = th.sample(500, 11).unwrap();
        let b = th.sample(500, 11).unwrap();
        let c = th.sample(500, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.values(), c.values());
        assert_eq!(a.seed(), 11);
    }

    #[test]
    fn degenerate_mixture_samples_zeros() {
        let th = ZiegpdParams::m1(1.0, 2.0, 1.0, 0.2).unwrap();
        let s = th.sample(1000, 3).unwrap();
        assert_eq!(s.zero_count(), 1000);
        assert!(s.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn sample_rejects_negative() {
        assert!(Sample::new(alloc::vec![1.0, -0.5]).is_err());
        assert!(Sample::new(alloc::vec![f64::NAN]).is_err());
    }
}
