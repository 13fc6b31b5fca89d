use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Square lattice of `n x n` values in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeField {
    n: usize,
    values: Vec<f64>,
    spacing: f64,
}

impl LatticeField {
    pub fn new(n: usize, values: Vec<f64>, spacing: f64) -> Result<Self> {
        if n == 0 || values.len() != n * n {
            return Err(Error::invalid(format!(
                "a lattice of side {n} needs {} values, got {}",
                n * n,
                values.len()
            )));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::invalid("lattice spacing must be positive"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("lattice values must be finite"));
        }
        Ok(Self { n, values, spacing })
    }

    /// Binary field; every value must be 0 or 1.
    pub fn binary(n: usize, values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| **v != 0.0 && **v != 1.0) {
            return Err(Error::invalid(format!("binary field contains {v}")));
        }
        Self::new(n, values, 1.0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n + col]
    }

    pub fn is_binary(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0 || *v == 1.0)
    }
}
