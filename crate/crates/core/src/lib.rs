//! Simulation and analysis of time-bin entangled photon pairs from a pulsed
//! spontaneous four-wave mixing source.
//!
//! - [`config`]: experiment parameters and derived detection probabilities
//! - [`timebin`]: exact single-pair amplitude engine with 1-bit-delay interferometers
//! - [`analytic`]: closed-form pair/noise means, CAR and visibility
//! - [`montecarlo`]: event-level detection simulation and coincidence histograms
//! - [`fit`]: scaling fits, fringe fits and CAR curves

pub mod analytic;
pub mod config;
pub mod error;
pub mod fit;
pub mod montecarlo;
pub mod timebin;

pub use error::{Error, Result};
