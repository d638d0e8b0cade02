//! Interference noise in a quantum channel that shares a fiber with
//! classical WDM traffic, in single-mode and few-mode (SDM) links.
//!
//! The model tracks, per mode group and frequency slot, the interference
//! power generated by spontaneous Raman scattering, four-wave mixing,
//! inter-group crosstalk and Rayleigh backscattering, on top of signal
//! profiles tilted by stimulated Raman scattering.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod fwm;
pub mod integrate;
pub mod kinetics;
pub mod metrics;
pub mod oracle;
pub mod profiles;
pub mod scenario;
pub mod srs;
pub mod units;

pub use error::{Error, Result};
