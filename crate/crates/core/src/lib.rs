//! Statistical inference for hit enrichment curves from virtual-screening
//! ranking algorithms.
//!
//! The crate estimates hit enrichment and enrichment-factor curves, tests
//! recall differences between competing algorithms at chosen testing
//! fractions, builds simultaneous confidence bands for single curves and
//! curve differences, and ships a Monte Carlo harness for power, type-I
//! error, and coverage studies.

pub mod bands;
pub mod contingency;
pub mod curves;
pub mod dataset;
pub mod error;
pub mod linalg;
pub mod pointwise;
pub mod simulate;
pub mod stats;

pub(crate) mod rng;

pub use error::{Error, Result};
