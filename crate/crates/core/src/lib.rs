//! Zero-inflated extended generalized Pareto distributions (ZIEGPD).
//!
//! A ZIEGPD mixes a point mass `pi` at zero with an extended GPD for the
//! positive part: the GPD CDF `H(z; sigma, xi)` composed with a carrier CDF
//! `W` on `[0, 1]` that shapes the bulk and the lower tail while keeping the
//! GPD upper tail index `xi`.
//!
//! The crate is `no_std` (with `alloc`). Enable the default `std` feature to
//! use the platform math library instead of `libm`.
//!
//! ```
//! use ziegpd_core::{CarrierFamily, GpdParams, ZiegpdParams};
//!
//! let theta = ZiegpdParams::new(
//!     0.5999,
//!     CarrierFamily::M1 { kappa: 0.4568 },
//!     GpdParams::new(4.9095, 0.3281).unwrap(),
//! )
//! .unwrap();
//! let level = theta.return_level(10.0).unwrap();
//! assert!((level - 4.2433).abs() < 0.01);
//! ```

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod carrier;
pub mod diagnostics;
mod error;
pub mod gpd;
pub mod inference;
mod math;
pub mod mcmc;
pub mod optim;
pub mod rng;
pub mod root;
pub mod stats;
pub mod zigev;
pub mod ziegpd;

pub use carrier::{beta_cdf_bdelta, CarrierFamily, Model};
pub use error::{Error, Result};
pub use gpd::GpdParams;
pub use inference::{
    bootstrap_ci, fit, fit_bayes, fit_mle, BootstrapSummary, Diagnostics, FitOptions, FitResult,
    Interval, Method,
};
pub use mcmc::McmcOptions;
pub use ziegpd::{Param, Sample, ZiegpdParams};
