//! iltlab: a simulation and exact-computation laboratory for the mutual
//! intersection local time of two independent one-dimensional Brownian
//! motions.
//!
//! The crate pairs Monte Carlo machinery (paths, exit-time embeddings, ILT
//! estimators, small-deviation experiments) with independent exact oracles
//! (series, quadrature, dynamic programming, enumeration) so that every
//! stochastic estimate has a deterministic cross-check.

pub mod config;
pub mod embed;
pub mod error;
pub mod ilt;
pub mod lab;
pub mod oracle;
pub mod path;
pub mod report;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
