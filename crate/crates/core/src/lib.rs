//! Construction, verification, classification, perturbation and local
//! optimization of N-point configurations on the unit sphere under
//! logarithmic, Riesz, Gaussian and bi-quadratic pair potentials, with a
//! focus on the N = d + 2 family.

#[cfg(feature = "cli")]
pub mod cli;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod morse;
pub mod optimize;
pub mod perturbation;
pub mod potentials;
pub mod stationarity;
pub mod sweep;

pub use error::{Error, Result};
