//! Carrier CDFs `W(u)` on `[0, 1]`.
//!
//! * `M1`: `W(u) = u^kappa`
//! * `M2`: `W(u) = 1 - B_delta((1 - u)^delta)`
//! * `M3`: `W(u) = [1 - B_delta((1 - u)^delta)]^(kappa / 2)`
//!
//! where `B_delta(t) = ((1 + delta) / delta) t^(1/delta) (1 - t / (1 + delta))`
//! is the CDF of a Beta(1/delta, 2) variable.
//!
//! Internally a point of the unit interval is carried as `(u, 1 - u, ln(1 - u))`
//! so that both tails are evaluated without cancellation; the GPD hands us
//! `ln(1 - H(z))` directly.

use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::math::{self, expm1_minus_id, ln_1m_exp};
use crate::root::brent;

const ROOT_MAX_ITER: usize = 200;

/// Carrier family tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Model {
    M1,
    M2,
    M3,
}

impl Model {
    pub fn as_str(&self) -> &'static str {
        match self {
            Model::M1 => "m1",
            Model::M2 => "m2",
            Model::M3 => "m3",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "m1" => Ok(Model::M1),
            "m2" => Ok(Model::M2),
            "m3" => Ok(Model::M3),
            _ => Err(Error::domain("model must be one of m1, m2, m3")),
        }
    }
}

/// A carrier CDF with its shape parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CarrierFamily {
    M1 { kappa: f64 },
    M2 { delta: f64 },
    M3 { delta: f64, kappa: f64 },
}

/// `B_delta(t)`, the Beta(1/delta, 2) CDF.
pub fn beta_cdf_bdelta(t: f64, delta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::domain("t must lie in [0, 1]"));
    }
    check_shape(delta, "delta")?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let r = (1.0 + delta) / delta * math::powf(t, 1.0 / delta) * (1.0 - t / (1.0 + delta));
    Ok(r.min(1.0))
}

fn check_shape(v: f64, name: &str) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(alloc::format!("{name} must be finite and > 0")))
    }
}

fn check_unit(u: f64) -> Result<()> {
    if (0.0..=1.0).contains(&u) {
        Ok(())
    } else {
        Err(Error::domain("argument must lie in [0, 1]"))
    }
}

/// `a * ln_x`, treating `0 * -inf` as 0.
#[inline]
fn scale_ln(a: f64, ln_x: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a * ln_x
    }
}

/// A point `u` of `[0, 1]` with its complement and log-complement.
#[derive(Debug, Clone, Copy)]
pub(crate) struct UnitPoint {
    pub u: f64,
    pub s: f64,
    pub ln_s: f64,
}

impl UnitPoint {
    pub fn from_u(u: f64) -> Self {
        Self {
            u,
            s: 1.0 - u,
            ln_s: math::ln_1p(-u),
        }
    }

    pub fn from_ln_s(ln_s: f64) -> Self {
        Self {
            u: -math::exp_m1(ln_s),
            s: math::exp(ln_s),
            ln_s,
        }
    }

    fn from_s(s: f64) -> Self {
        Self {
            u: 1.0 - s,
            s,
            ln_s: math::ln(s),
        }
    }

    #[inline]
    fn ln_u(&self) -> f64 {
        if self.u < 0.5 {
            math::ln(self.u)
        } else {
            math::ln_1p(-self.s)
        }
    }
}

// M2 building blocks. `g(s) = B_delta(s^delta) = s (1 + delta - s^delta) / delta`
// is the M2 survival function written in the complement `s = 1 - u`.

#[inline]
fn m2_sf(p: &UnitPoint, delta: f64) -> f64 {
    if p.s == 0.0 {
        return 0.0;
    }
    p.s * (1.0 + delta - math::exp(delta * p.ln_s)) / delta
}

#[inline]
fn m2_cdf(p: &UnitPoint, delta: f64) -> f64 {
    if p.u < 0.5 {
        // delta * W = (e + delta u) - u e with e = (1 - u)^delta - 1; the
        // bracket is rewritten through expm1(x) - x so that the O(u^2)
        // lower tail survives.
        let l = p.ln_s;
        let e = math::exp_m1(delta * l);
        let lead = expm1_minus_id(delta * l) - delta * expm1_minus_id(l);
        ((lead - p.u * e) / delta).max(0.0)
    } else {
        1.0 - m2_sf(p, delta)
    }
}

#[inline]
fn m2_ln_pdf(p: &UnitPoint, delta: f64) -> f64 {
    math::ln(1.0 + 1.0 / delta) + ln_1m_exp(delta * p.ln_s)
}

#[inline]
fn m2_pdf(p: &UnitPoint, delta: f64) -> f64 {
    -(1.0 + 1.0 / delta) * math::exp_m1(delta * p.ln_s)
}

/// `(W2, 1 - W2, ln W2)` for M2.
#[inline]
fn m2_parts(p: &UnitPoint, delta: f64) -> (f64, f64, f64) {
    let w = m2_cdf(p, delta);
    let wbar = m2_sf(p, delta);
    let ln_w = if w < 0.5 {
        math::ln(w)
    } else {
        math::ln_1p(-wbar)
    };
    (w, wbar, ln_w)
}

/// Inverts M2 given the target CDF value `w` and its complement `wbar`.
fn m2_invert(delta: f64, w: f64, wbar: f64) -> Result<UnitPoint> {
    if w <= 0.0 {
        return Ok(UnitPoint::from_u(0.0));
    }
    if wbar <= 0.0 {
        return Ok(UnitPoint::from_s(0.0));
    }
    if wbar <= 0.5 {
        // s <= g(s) <= (1 + delta) s / delta brackets the complement. The
        // lower end is the root itself once s^delta underflows, so widen it
        // a little to keep the signs apart under rounding.
        let lo = wbar * delta / (1.0 + delta) * (1.0 - 1e-12);
        let hi = wbar;
        let s = brent(
            |s| m2_sf(&UnitPoint::from_s(s), delta) - wbar,
            lo,
            hi,
            1e-14 * hi,
            ROOT_MAX_ITER,
        )?;
        Ok(UnitPoint::from_s(s))
    } else {
        // lower tail: W2(u) ~ (1 + delta) u^2 / 2
        let scale = math::sqrt(2.0 * w / (1.0 + delta)).min(1.0);
        let u = brent(
            |u| m2_cdf(&UnitPoint::from_u(u), delta) - w,
            0.0,
            1.0,
            1e-14 * scale,
            ROOT_MAX_ITER,
        )?;
        Ok(UnitPoint::from_u(u))
    }
}

impl CarrierFamily {
    pub fn model(&self) -> Model {
        match self {
            CarrierFamily::M1 { .. } => Model::M1,
            CarrierFamily::M2 { .. } => Model::M2,
            CarrierFamily::M3 { .. } => Model::M3,
        }
    }

    pub fn kappa(&self) -> Option<f64> {
        match *self {
            CarrierFamily::M1 { kappa } | CarrierFamily::M3 { kappa, .. } => Some(kappa),
            CarrierFamily::M2 { .. } => None,
        }
    }

    pub fn delta(&self) -> Option<f64> {
        match *self {
            CarrierFamily::M2 { delta } | CarrierFamily::M3 { delta, .. } => Some(delta),
            CarrierFamily::M1 { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            CarrierFamily::M1 { kappa } => check_shape(kappa, "kappa"),
            CarrierFamily::M2 { delta } => check_shape(delta, "delta"),
            CarrierFamily::M3 { delta, kappa } => {
                check_shape(delta, "delta")?;
                check_shape(kappa, "kappa")
            }
        }
    }

    #[inline]
    pub(crate) fn cdf_at(&self, p: &UnitPoint) -> f64 {
        match *self {
            CarrierFamily::M1 { kappa } => math::exp(kappa * p.ln_u()),
            CarrierFamily::M2 { delta } => m2_cdf(p, delta),
            CarrierFamily::M3 { delta, kappa } => {
                let (_, _, ln_w) = m2_parts(p, delta);
                math::exp(0.5 * kappa * ln_w)
            }
        }
    }

    #[inline]
    pub(crate) fn sf_at(&self, p: &UnitPoint) -> f64 {
        match *self {
            CarrierFamily::M1 { kappa } => -math::exp_m1(kappa * p.ln_u()),
            CarrierFamily::M2 { delta } => m2_sf(p, delta),
            CarrierFamily::M3 { delta, kappa } => {
                let (_, _, ln_w) = m2_parts(p, delta);
                -math::exp_m1(0.5 * kappa * ln_w)
            }
        }
    }

    /// `ln W'(u)`.
    #[inline]
    pub(crate) fn ln_pdf_at(&self, p: &UnitPoint) -> f64 {
        match *self {
            CarrierFamily::M1 { kappa } => math::ln(kappa) + scale_ln(kappa - 1.0, p.ln_u()),
            CarrierFamily::M2 { delta } => m2_ln_pdf(p, delta),
            CarrierFamily::M3 { delta, kappa } => {
                let (_, _, ln_w) = m2_parts(p, delta);
                math::ln(0.5 * kappa) + scale_ln(0.5 * kappa - 1.0, ln_w) + m2_ln_pdf(p, delta)
            }
        }
    }

    pub(crate) fn pdf_at(&self, p: &UnitPoint) -> f64 {
        match *self {
            CarrierFamily::M1 { kappa } => kappa * math::exp(scale_ln(kappa - 1.0, p.ln_u())),
            CarrierFamily::M2 { delta } => m2_pdf(p, delta),
            CarrierFamily::M3 { delta, kappa } => {
                let (_, _, ln_w) = m2_parts(p, delta);
                0.5 * kappa * math::exp(scale_ln(0.5 * kappa - 1.0, ln_w)) * m2_pdf(p, delta)
            }
        }
    }

    /// Carrier quantile as a unit point, for `v` in `[0, 1]`.
    pub(crate) fn quantile_point(&self, v: f64) -> Result<UnitPoint> {
        if v <= 0.0 {
            return Ok(UnitPoint::from_u(0.0));
        }
        if v >= 1.0 {
            return Ok(UnitPoint::from_s(0.0));
        }
        match *self {
            CarrierFamily::M1 { kappa } => {
                let ln_u = math::ln(v) / kappa;
                let u = math::exp(ln_u);
                if u < 0.5 {
                    Ok(UnitPoint::from_u(u))
                } else {
                    Ok(UnitPoint::from_s(-math::exp_m1(ln_u)))
                }
            }
            CarrierFamily::M2 { delta } => m2_invert(delta, v, 1.0 - v),
            CarrierFamily::M3 { delta, kappa } => {
                let ln_w = 2.0 / kappa * math::ln(v);
                m2_invert(delta, math::exp(ln_w), -math::exp_m1(ln_w))
            }
        }
    }

    /// `W(u)` for `u` in `[0, 1]`.
    pub fn cdf(&self, u: f64) -> Result<f64> {
        self.validate()?;
        check_unit(u)?;
        Ok(self.cdf_at(&UnitPoint::from_u(u)))
    }

    /// `1 - W(u)` for `u` in `[0, 1]`, accurate when it is small.
    pub fn sf(&self, u: f64) -> Result<f64> {
        self.validate()?;
        check_unit(u)?;
        Ok(self.sf_at(&UnitPoint::from_u(u)))
    }

    /// `dW/du` on the open interval `(0, 1)`.
    pub fn pdf(&self, u: f64) -> Result<f64> {
        self.validate()?;
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::domain("u must lie in (0, 1)"));
        }
        Ok(self.pdf_at(&UnitPoint::from_u(u)))
    }

    /// `W^{-1}(v)` for `v` in `[0, 1]`.
    pub fn quantile(&self, v: f64) -> Result<f64> {
        self.validate()?;
        check_unit(v)?;
        Ok(self.quantile_point(v)?.u)
    }
}
