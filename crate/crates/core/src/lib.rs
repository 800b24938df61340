//! Gradient-mapping-norm minimization: optimized composite gradient methods,
//! adaptive accelerated methods with restarts, and runtime certificates.

pub mod analysis;
pub mod cli;
pub mod engines;
pub mod error;
pub mod problems;
pub mod schedules;
pub mod space;

pub use error::{Error, Result};
pub use space::{DualVector, Metric, PrimalPoint, Vector};
