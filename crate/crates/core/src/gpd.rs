//! Generalized Pareto kernel `H(z; sigma, xi)` restricted to `xi >= 0`.

use crate::error::{Error, Result};
use crate::math;

/// Shape values with `|xi|` below this use the exponential limit.
pub const XI_ZERO_TOL: f64 = 1e-8;

/// Scale and shape of a generalized Pareto distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpdParams {
    sigma: f64,
    xi: f64,
}

impl GpdParams {
    pub fn new(sigma: f64, xi: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::domain("sigma must be finite and > 0"));
        }
        if !(xi.is_finite() && xi >= 0.0) {
            return Err(Error::domain("xi must be finite and >= 0"));
        }
        Ok(Self { sigma, xi })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    #[inline]
    fn is_exponential(&self) -> bool {
        self.xi < XI_ZERO_TOL
    }

    /// `ln(1 - H(z))` for `z >= 0`, without validation.
    #[inline]
    pub(crate) fn ln_sf_unchecked(&self, z: f64) -> f64 {
        if self.is_exponential() {
            -z / self.sigma
        } else {
            let arg = self.xi * z / self.sigma;
            // 1 + xi z / sigma >= 1 whenever z, xi >= 0.
            debug_assert!(arg >= 0.0);
            -math::ln_1p(arg) / self.xi
        }
    }

    /// `ln h(z)` for `z >= 0`, without validation.
    #[inline]
    pub(crate) fn ln_pdf_unchecked(&self, z: f64) -> f64 {
        if self.is_exponential() {
            -math::ln(self.sigma) - z / self.sigma
        } else {
            let l = math::ln_1p(self.xi * z / self.sigma);
            -math::ln(self.sigma) - (1.0 / self.xi + 1.0) * l
        }
    }

    /// Inverse of the survival function given `ln(1 - u)`.
    #[inline]
    pub(crate) fn quantile_from_ln_sf(&self, ln_s: f64) -> f64 {
        if self.is_exponential() {
            -self.sigma * ln_s
        } else {
            self.sigma / self.xi * math::exp_m1(-self.xi * ln_s)
        }
    }

    fn check_z(z: f64) -> Result<()> {
        if z >= 0.0 && !z.is_nan() {
            Ok(())
        } else {
            Err(Error::domain("z must be >= 0"))
        }
    }

    pub fn cdf(&self, z: f64) -> Result<f64> {
        Self::check_z(z)?;
        Ok(-math::exp_m1(self.ln_sf_unchecked(z)))
    }

    pub fn sf(&self, z: f64) -> Result<f64> {
        Self::check_z(z)?;
        Ok(math::exp(self.ln_sf_unchecked(z)))
    }

    pub fn pdf(&self, z: f64) -> Result<f64> {
        Self::check_z(z)?;
        Ok(math::exp(self.ln_pdf_unchecked(z)))
    }

    /// Quantile for `u` in `[0, 1)`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&u) {
            return Err(Error::domain("u must lie in [0, 1)"));
        }
        Ok(self.quantile_from_ln_sf(math::ln_1p(-u)))
    }
}
