//! Contrast-based posterior inference: grid posteriors built from an
//! arbitrary contrast function, MAP estimation, Monte-Carlo sandwich
//! covariances, and three case studies (Gaussian-field variogram fitting,
//! autologistic pseudo-likelihood, and Boolean-cylinder surface roughness).

pub mod autologistic;
pub mod error;
pub mod inference;
pub mod io;
pub mod quadrature;
pub mod roughness;
pub mod seeds;
pub mod simulate;
pub mod validation;
pub mod variogram;

pub use error::{Error, Result};
pub use nalgebra;
pub use inference::*;
