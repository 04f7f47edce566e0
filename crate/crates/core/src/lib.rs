//! Two-layer weighted contact networks, exact SIR simulation on them, and
//! estimation of the infection rate from aggregated observations.
//!
//! - [`netgen`] builds the household layer and the polynomial or workplace
//!   clique second layer.
//! - [`epidemics`] runs the Gillespie simulation and replays event logs.
//! - [`features`] samples daily-report series and reads/writes datasets.
//! - [`classical`] implements the likelihood-based estimators and RMSE.
//! - [`harness`] runs whole experiments and writes result tables.
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod classical;
pub mod epidemics;
pub mod error;
pub mod features;
pub mod harness;
pub mod netgen;
pub mod rng;

pub use error::{Error, Result};
