use rand::Rng;

use super::field::LatticeField;
use crate::autologistic::{conditional_prob, AutologisticParams};
use crate::error::{Error, Result};
use crate::seeds::rng_from_seed;

/// Burn-in used when callers have no reason to choose otherwise.
pub const DEFAULT_SWEEPS: usize = 500;

/// Two-state nearest-neighbour Markov field by systematic-scan Gibbs sampling.
///
/// Free boundary: edge sites condition on the neighbours that exist. The chain
/// starts from i.i.d. fair coin flips and the state after `sweeps` full scans
/// is returned.
pub fn simulate_markov_field(n: usize, theta1: f64, theta2: f64, sweeps: usize, seed: u64) -> Result<LatticeField> {
    if n == 0 {
        return Err(Error::invalid("grid side must be positive"));
    }
    if !theta1.is_finite() || !(theta2.abs() <= 1.0) {
        return Err(Error::invalid(format!(
            "simulation needs finite theta1 and |theta2| <= 1, got ({theta1}, {theta2})"
        )));
    }
    if sweeps == 0 {
        return Err(Error::invalid("at least one Gibbs sweep is required"));
    }
    let params = AutologisticParams::new(theta1, theta2);
    let p1: [f64; 5] = std::array::from_fn(|s| conditional_prob(1, s as u32, &params));
    let mut rng = rng_from_seed(seed);
    let mut x: Vec<u8> = (0..n * n).map(|_| rng.random_bool(0.5) as u8).collect();
    for _ in 0..sweeps {
        for r in 0..n {
            for c in 0..n {
                let mut s = 0usize;
                if r > 0 {
                    s += x[(r - 1) * n + c] as usize;
                }
                if r + 1 < n {
                    s += x[(r + 1) * n + c] as usize;
                }
                if c > 0 {
                    s += x[r * n + c - 1] as usize;
                }
                if c + 1 < n {
                    s += x[r * n + c + 1] as usize;
                }
                x[r * n + c] = (rng.random::<f64>() < p1[s]) as u8;
            }
        }
    }
    LatticeField::binary(n, x.into_iter().map(f64::from).collect())
}
