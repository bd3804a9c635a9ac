//! Generalized Mittag-Leffler and generalized Linnik distributions:
//! sampling, log-moments, method-of-log-moments estimation, confidence
//! intervals and Monte Carlo studies.

pub mod asymptotics;
pub mod bootstrap;
pub mod data;
pub mod error;
pub mod estimators;
pub mod moments;
pub mod montecarlo;
pub mod sampling;
pub mod specfun;

pub use error::{Error, Result};
