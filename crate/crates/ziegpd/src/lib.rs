//! File formats, daily-precipitation preprocessing, simulation studies and
//! the `ziegpd` command line, built on `ziegpd-core`.

pub mod cli;
mod error;
pub mod formats;
pub mod pipeline;
pub mod simulation;

pub use error::{Error, Result};
