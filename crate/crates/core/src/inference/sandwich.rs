use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use super::finite_diff::{gradient_or_fd, hessian_or_fd};
use super::param::ParamPoint;
use super::problem::{Contrast, Resimulate};
use crate::error::{Error, Result};
use crate::seeds::{label, stream_seed};

/// Gradients and Hessians of the contrast at a fixed parameter, one per
/// independently resimulated dataset (in replication order).
#[derive(Debug, Clone)]
pub struct McDerivatives {
    pub t: f64,
    pub gradients: Vec<DVector<f64>>,
    pub hessians: Vec<DMatrix<f64>>,
}

impl McDerivatives {
    pub fn reps(&self) -> usize {
        self.gradients.len()
    }

    /// `t` times the sample covariance of the gradients.
    pub fn gamma(&self) -> DMatrix<f64> {
        sample_covariance(&self.gradients) * self.t
    }

    /// Sample mean of the Hessians.
    pub fn info(&self) -> DMatrix<f64> {
        let p = self.hessians[0].nrows();
        let sum = self.hessians.iter().fold(DMatrix::zeros(p, p), |acc, h| acc + h);
        sum / self.hessians.len() as f64
    }
}

pub(crate) fn sample_covariance(xs: &[DVector<f64>]) -> DMatrix<f64> {
    let n = xs.len() as f64;
    let p = xs[0].len();
    let mean = xs.iter().fold(DVector::zeros(p), |acc, x| acc + x) / n;
    let mut cov = DMatrix::zeros(p, p);
    for x in xs {
        let d = x - &mean;
        cov += &d * d.transpose();
    }
    cov / (n - 1.0)
}

/// Seed of replication `index` under `master_seed`.
pub fn replication_seed(master_seed: u64, index: usize) -> u64 {
    stream_seed(master_seed, &[label::RESIMULATE, index as u64])
}

/// Resimulate `reps` datasets at `at` and record gradient and Hessian of each
/// contrast there. Deterministic in `(master_seed, reps)`.
pub fn mc_derivatives<R: Resimulate>(
    sim: &R,
    at: &[f64],
    reps: usize,
    master_seed: u64,
) -> Result<McDerivatives> {
    if reps < 2 {
        return Err(Error::invalid("Monte-Carlo estimation needs at least 2 replications"));
    }
    let per_rep: Vec<(f64, DVector<f64>, DMatrix<f64>)> = (0..reps)
        .into_par_iter()
        .map(|index| {
            let wrap = |e: Error| Error::Replication {
                index,
                source: Box::new(e),
            };
            let problem = sim.resimulate(at, replication_seed(master_seed, index)).map_err(wrap)?;
            let g = gradient_or_fd(&problem, at).map_err(wrap)?;
            let h = hessian_or_fd(&problem, at).map_err(wrap)?;
            Ok((problem.t(), g, h))
        })
        .collect::<Result<_>>()?;
    let t = per_rep[0].0;
    let (gradients, hessians) = per_rep.into_iter().map(|(_, g, h)| (g, h)).unzip();
    Ok(McDerivatives { t, gradients, hessians })
}

/// Monte-Carlo estimate of `Gamma = lim var(sqrt(t) grad U_t)`.
pub fn mc_estimate_gamma<R: Resimulate>(sim: &R, at: &[f64], reps: usize, master_seed: u64) -> Result<DMatrix<f64>> {
    Ok(mc_derivatives(sim, at, reps, master_seed)?.gamma())
}

/// Monte-Carlo estimate of `I = lim H U_t`.
pub fn mc_estimate_info<R: Resimulate>(sim: &R, at: &[f64], reps: usize, master_seed: u64) -> Result<DMatrix<f64>> {
    Ok(mc_derivatives(sim, at, reps, master_seed)?.info())
}

/// Gaussian limit law `N(mean, covariance)` of the estimator.
#[derive(Debug, Clone, Serialize)]
pub struct LimitDistribution {
    pub mean: ParamPoint,
    pub covariance: DMatrix<f64>,
}

impl LimitDistribution {
    /// Symmetrizes `covariance`, then rejects eigenvalues below `-1e-8 trace`.
    pub fn new(mean: ParamPoint, covariance: DMatrix<f64>) -> Result<Self> {
        let p = mean.dim();
        if covariance.nrows() != p || covariance.ncols() != p {
            return Err(Error::invalid("covariance shape does not match the mean"));
        }
        let sym = (&covariance + covariance.transpose()) * 0.5;
        if sym.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotPositiveSemiDefinite("non-finite entries".into()));
        }
        let trace = sym.trace();
        let min_eig = sym.clone().symmetric_eigen().eigenvalues.min();
        if min_eig < -1e-8 * trace.abs() {
            return Err(Error::NotPositiveSemiDefinite(format!(
                "smallest eigenvalue {min_eig:e} with trace {trace:e}"
            )));
        }
        Ok(Self { mean, covariance: sym })
    }
}

/// Sandwich limit law `N(map, I^{-1} Gamma I^{-1} / t)`.
pub fn limit_distribution(
    map_point: &ParamPoint,
    info: &DMatrix<f64>,
    gamma: &DMatrix<f64>,
    t: f64,
) -> Result<LimitDistribution> {
    let inv = info
        .clone()
        .try_inverse()
        .filter(|m| m.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::Singular("information matrix".into()))?;
    let cov = &inv * gamma * &inv / t;
    LimitDistribution::new(map_point.clone(), cov)
}

/// Per-coordinate intervals plus the confidence ellipsoid
/// `(x - center)' shape^{-1} (x - center) <= radius_sq`.
#[derive(Debug, Clone, Serialize)]
pub struct ConfidenceRegion {
    pub level: f64,
    pub intervals: Vec<(f64, f64)>,
    pub center: ParamPoint,
    pub shape: DMatrix<f64>,
    pub radius_sq: f64,
}

impl ConfidenceRegion {
    /// Whether `x` lies in the ellipsoid; `None` for a singular shape matrix.
    pub fn ellipsoid_contains(&self, x: &[f64]) -> Option<bool> {
        let d = DVector::from_iterator(x.len(), x.iter().zip(self.center.iter()).map(|(a, b)| a - b));
        let inv = self.shape.clone().try_inverse()?;
        Some(d.dot(&(inv * &d)) <= self.radius_sq)
    }

    pub fn interval_contains(&self, coord: usize, x: f64) -> bool {
        let (lo, hi) = self.intervals[coord];
        lo <= x && x <= hi
    }
}

pub fn confidence_region(dist: &LimitDistribution, level: f64) -> Result<ConfidenceRegion> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!("confidence level {level} outside (0, 1)")));
    }
    let p = dist.mean.dim();
    let z = Normal::standard().inverse_cdf(0.5 * (1.0 + level));
    let intervals = (0..p)
        .map(|i| {
            let half = z * dist.covariance[(i, i)].max(0.0).sqrt();
            (dist.mean[i] - half, dist.mean[i] + half)
        })
        .collect();
    let chi2 = ChiSquared::new(p as f64).expect("positive degrees of freedom");
    Ok(ConfidenceRegion {
        level,
        intervals,
        center: dist.mean.clone(),
        shape: dist.covariance.clone(),
        radius_sq: chi2.inverse_cdf(level),
    })
}
