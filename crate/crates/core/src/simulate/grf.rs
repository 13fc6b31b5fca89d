use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use super::field::LatticeField;
use crate::error::{Error, Result};
use crate::seeds::rng_from_seed;

/// Largest number of lattice nodes handled by the dense factorization.
pub const MAX_GRF_NODES: usize = 10_000;

/// Exact sampler for a centered unit-variance Gaussian field on an `n x n`
/// lattice with covariance `exp(-theta h)`, through the Cholesky factor of the
/// full covariance matrix. Build once, sample many times.
#[derive(Debug, Clone)]
pub struct GrfSampler {
    n: usize,
    spacing: f64,
    theta: f64,
    factor: DMatrix<f64>,
}

impl GrfSampler {
    pub fn new(n: usize, theta: f64, spacing: f64) -> Result<Self> {
        if n == 0 || n * n > MAX_GRF_NODES {
            return Err(Error::invalid(format!(
                "grid side {n} outside 1..={} for dense simulation",
                (MAX_GRF_NODES as f64).sqrt() as usize
            )));
        }
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::invalid(format!("theta must be positive, got {theta}")));
        }
        let m = n * n;
        let cov = DMatrix::from_fn(m, m, |a, b| {
            let (ra, ca) = ((a / n) as f64, (a % n) as f64);
            let (rb, cb) = ((b / n) as f64, (b % n) as f64);
            let h = ((ra - rb).powi(2) + (ca - cb).powi(2)).sqrt() * spacing;
            (-theta * h).exp()
        });
        let factor = match cov.clone().cholesky() {
            Some(c) => c.unpack(),
            None => (cov + DMatrix::identity(m, m) * 1e-10)
                .cholesky()
                .ok_or_else(|| Error::Singular("GRF covariance (after jitter)".into()))?
                .unpack(),
        };
        Ok(Self {
            n,
            spacing,
            theta,
            factor,
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn sample(&self, seed: u64) -> LatticeField {
        let m = self.n * self.n;
        let mut rng = rng_from_seed(seed);
        let z = DVector::from_iterator(m, (0..m).map(|_| StandardNormal.sample(&mut rng)));
        let x = &self.factor * z;
        LatticeField::new(self.n, x.as_slice().to_vec(), self.spacing).expect("finite Gaussian draws")
    }
}

/// One exact draw with unit node spacing.
pub fn simulate_grf_exponential(n: usize, theta: f64, seed: u64) -> Result<LatticeField> {
    Ok(GrfSampler::new(n, theta, 1.0)?.sample(seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_invalid_inputs() {
        assert!(GrfSampler::new(101, 1.0, 1.0).is_err());
        assert!(GrfSampler::new(5, 0.0, 1.0).is_err());
        assert!(GrfSampler::new(5, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn identical_seed_identical_field() {
        let s = GrfSampler::new(6, 1.0, 1.0).unwrap();
        assert_eq!(s.sample(11), s.sample(11));
        assert_ne!(s.sample(11), s.sample(12));
    }

    #[test]
    fn lag_one_correlation_and_unit_variance() {
        let s = GrfSampler::new(20, 1.0, 1.0).unwrap();
        let reps = 500;
        let (mut var, mut lag) = (Vec::new(), Vec::new());
        for seed in 0..reps {
            let f = s.sample(seed);
            let v = f.values();
            var.push(v[0] * v[0]);
            lag.push(f.get(10, 10) * f.get(10, 11));
        }
        let stats = |xs: &[f64]| {
            let m = xs.iter().sum::<f64>() / xs.len() as f64;
            let sd = (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt();
            (m, sd / (xs.len() as f64).sqrt())
        };
        let (mv, sev) = stats(&var);
        let (ml, sel) = stats(&lag);
        assert!((mv - 1.0).abs() < 3.0 * sev, "{mv} +- {sev}");
        assert!((ml - (-1f64).exp()).abs() < 3.0 * sel, "{ml} +- {sel}");
    }

    #[test]
    fn short_range_field_is_nearly_independent() {
        let s = GrfSampler::new(20, 50.0, 1.0).unwrap();
        let lag: Vec<f64> = (0..500).map(|seed| {
            let f = s.sample(seed);
            f.get(3, 3) * f.get(3, 4)
        }).collect();
        let m = lag.iter().sum::<f64>() / 500.0;
        let sd = (lag.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 499.0).sqrt();
        assert!(m.abs() < 3.0 * sd / 500f64.sqrt());
    }
}
