use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::map::MapEstimate;
use super::param::ParamBox;
use super::prior::Prior;
use super::problem::Contrast;
use crate::error::{Error, Result};

/// Uniform grid along one parameter coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub lo: f64,
    pub hi: f64,
    pub nodes: usize,
}

impl GridAxis {
    pub fn new(lo: f64, hi: f64, nodes: usize) -> Self {
        Self { lo, hi, nodes }
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.nodes - 1) as f64
    }

    pub fn coords(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.nodes)
            .map(|k| if k + 1 == self.nodes { self.hi } else { self.lo + k as f64 * h })
            .collect()
    }

    /// One axis per box coordinate, all with the same node count.
    pub fn spanning(bx: &ParamBox, nodes: usize) -> Vec<GridAxis> {
        (0..bx.dim())
            .map(|i| GridAxis::new(bx.lower()[i], bx.upper()[i], nodes))
            .collect()
    }
}

fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    w[0] = 0.5 * h;
    w[n - 1] = 0.5 * h;
    w
}

/// Tabulated, normalized CB-posterior density on a rectangular grid.
///
/// Values are stored as `log{exp(-t U_t(alpha)) c(alpha)}` in row-major order
/// (last coordinate fastest).
#[derive(Debug, Clone)]
pub struct PosteriorGrid {
    axes: Vec<Vec<f64>>,
    steps: Vec<f64>,
    log_unnorm: Vec<f64>,
    log_norm_const: f64,
    cell_measure: f64,
}

impl PosteriorGrid {
    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn len(&self) -> usize {
        self.log_unnorm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_unnorm.is_empty()
    }

    pub fn log_unnorm(&self) -> &[f64] {
        &self.log_unnorm
    }

    pub fn log_norm_const(&self) -> f64 {
        self.log_norm_const
    }

    pub fn cell_measure(&self) -> f64 {
        self.cell_measure
    }

    /// Multi-index of a flat node index.
    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for d in (0..self.dim()).rev() {
            let n = self.axes[d].len();
            idx[d] = flat % n;
            flat /= n;
        }
        idx
    }

    pub fn node(&self, flat: usize) -> Vec<f64> {
        self.unravel(flat)
            .iter()
            .enumerate()
            .map(|(d, &k)| self.axes[d][k])
            .collect()
    }

    /// Normalized density at every node.
    pub fn densities(&self) -> Vec<f64> {
        self.log_unnorm
            .iter()
            .map(|l| (l - self.log_norm_const).exp())
            .collect()
    }

    /// Product trapezoid weights, one per node.
    fn weights(&self) -> Vec<f64> {
        let per_axis: Vec<Vec<f64>> = self
            .axes
            .iter()
            .zip(&self.steps)
            .map(|(a, h)| trapezoid_weights(a.len(), *h))
            .collect();
        (0..self.len())
            .map(|flat| {
                self.unravel(flat)
                    .iter()
                    .enumerate()
                    .map(|(d, &k)| per_axis[d][k])
                    .product()
            })
            .collect()
    }

    /// Trapezoid integral of the normalized density (1 by construction).
    pub fn total_mass(&self) -> f64 {
        self.weights()
            .iter()
            .zip(self.densities())
            .map(|(w, p)| w * p)
            .sum()
    }

    /// Node with the largest density.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (k, v) in self.log_unnorm.iter().enumerate() {
            if *v > self.log_unnorm[best] {
                best = k;
            }
        }
        best
    }

    /// Marginal density of coordinate `axis` at its grid nodes.
    pub fn marginal(&self, axis: usize) -> Vec<f64> {
        let n = self.axes[axis].len();
        let own = trapezoid_weights(n, self.steps[axis]);
        let mut out = vec![0.0; n];
        for ((flat, w), p) in self.weights().into_iter().enumerate().zip(self.densities()) {
            let k = self.unravel(flat)[axis];
            out[k] += w / own[k] * p;
        }
        out
    }

    /// Quantile of a marginal by linear interpolation of the trapezoid CDF.
    pub fn marginal_quantile(&self, axis: usize, q: f64) -> f64 {
        let x = &self.axes[axis];
        let dens = self.marginal(axis);
        let h = self.steps[axis];
        let mut cdf = vec![0.0; x.len()];
        for k in 1..x.len() {
            cdf[k] = cdf[k - 1] + 0.5 * h * (dens[k - 1] + dens[k]);
        }
        let total = cdf[x.len() - 1];
        let target = q * total;
        match cdf.iter().position(|c| *c >= target) {
            Some(0) => x[0],
            Some(k) => {
                let span = cdf[k] - cdf[k - 1];
                let frac = if span > 0.0 { (target - cdf[k - 1]) / span } else { 0.0 };
                x[k - 1] + frac * (x[k] - x[k - 1])
            }
            None => x[x.len() - 1],
        }
    }

    /// Equal-tailed marginal credible interval for each coordinate.
    pub fn marginal_intervals(&self, level: f64) -> Vec<(f64, f64)> {
        let tail = 0.5 * (1.0 - level);
        (0..self.dim())
            .map(|d| (self.marginal_quantile(d, tail), self.marginal_quantile(d, 1.0 - tail)))
            .collect()
    }

    /// Second moment matrix about `center`, by trapezoid quadrature.
    fn second_moment_about(&self, center: &[f64]) -> DMatrix<f64> {
        let p = self.dim();
        let mut m = DMatrix::zeros(p, p);
        for ((flat, w), dens) in self.weights().into_iter().enumerate().zip(self.densities()) {
            let x = self.node(flat);
            for i in 0..p {
                for j in 0..=i {
                    m[(i, j)] += w * dens * (x[i] - center[i]) * (x[j] - center[j]);
                }
            }
        }
        for i in 0..p {
            for j in 0..i {
                m[(j, i)] = m[(i, j)];
            }
        }
        m
    }

    fn mean(&self) -> Vec<f64> {
        let p = self.dim();
        let mut mean = vec![0.0; p];
        for ((flat, w), dens) in self.weights().into_iter().enumerate().zip(self.densities()) {
            for (m, x) in mean.iter_mut().zip(self.node(flat)) {
                *m += w * dens * x;
            }
        }
        mean
    }
}

/// Tabulate the CB-posterior `p_t(alpha) ∝ exp(-t U_t(alpha)) c(alpha)` on a grid.
pub fn evaluate_cb_posterior<C: Contrast>(
    problem: &C,
    prior: &Prior,
    axes: &[GridAxis],
) -> Result<PosteriorGrid> {
    if axes.len() != problem.dim() || axes.len() != prior.support().dim() {
        return Err(Error::invalid("grid, prior and contrast dimensions differ"));
    }
    for (d, a) in axes.iter().enumerate() {
        if a.nodes < 3 {
            return Err(Error::invalid(format!("grid axis {d} needs at least 3 nodes")));
        }
        let (lo, hi) = (prior.support().lower()[d], prior.support().upper()[d]);
        if !(a.lo < a.hi && a.lo >= lo && a.hi <= hi) {
            return Err(Error::invalid(format!(
                "grid axis {d} [{}, {}] is not inside the prior support [{lo}, {hi}]",
                a.lo, a.hi
            )));
        }
    }
    let coords: Vec<Vec<f64>> = axes.iter().map(GridAxis::coords).collect();
    let steps: Vec<f64> = axes.iter().map(GridAxis::step).collect();
    let total: usize = coords.iter().map(Vec::len).product();
    let t = problem.t();

    let mut grid = PosteriorGrid {
        axes: coords,
        steps,
        log_unnorm: Vec::new(),
        log_norm_const: 0.0,
        cell_measure: 0.0,
    };
    grid.cell_measure = grid.steps.iter().product();

    let log_unnorm: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let x = grid.node(flat);
            let u = problem.value(&x);
            if u == f64::INFINITY {
                return Ok(f64::NEG_INFINITY);
            }
            if !u.is_finite() {
                return Err(Error::Evaluation { point: x, value: u });
            }
            Ok(-t * u + prior.log_density(&x))
        })
        .collect::<Result<_>>()?;

    let max = log_unnorm.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::EmptyPosterior);
    }
    grid.log_unnorm = log_unnorm;
    grid.log_norm_const = max;
    let mass = grid.total_mass();
    grid.log_norm_const = max + mass.ln();
    Ok(grid)
}

/// Posterior mean and covariance `Omega` by trapezoid quadrature.
pub fn posterior_moments(grid: &PosteriorGrid) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let mean = grid.mean();
    let cov = grid.second_moment_about(&mean);
    check_positive_definite(&cov)?;
    Ok((mean, cov))
}

fn check_positive_definite(cov: &DMatrix<f64>) -> Result<()> {
    let sym = (cov + cov.transpose()) * 0.5;
    if sym.iter().any(|v| !v.is_finite()) || sym.clone().cholesky().is_none() {
        return Err(Error::DegeneratePosterior(format!(
            "posterior covariance is not positive definite: {:?}",
            sym.as_slice()
        )));
    }
    Ok(())
}

/// Information-matrix estimates read off the shape of the CB-posterior.
#[derive(Debug, Clone, Serialize)]
pub struct PosteriorInfo {
    /// Moment-matched covariance (centered at the posterior mean).
    pub omega: DMatrix<f64>,
    /// `Omega^{-1} / t` with the moment-matched covariance.
    pub info: DMatrix<f64>,
    /// Same estimator with the second moment taken about the MAP.
    pub info_mode_centered: DMatrix<f64>,
    /// `2 pi p_t(map)^2 / t`, scalar parameters only.
    pub shortcut: Option<f64>,
}

/// Estimate `I_theta` from a tabulated posterior: `Omega^{-1}/t`, and for a
/// scalar parameter also `2 pi p_t(map)^2 / t`.
///
/// `map` must come from [`map_estimate`](super::map::map_estimate) on the same
/// contrast and prior, so that `-t * map.objective` is the unnormalized log
/// density at the mode.
pub fn info_from_posterior(grid: &PosteriorGrid, map: &MapEstimate, t: f64) -> Result<PosteriorInfo> {
    let (_, omega) = posterior_moments(grid)?;
    let omega_mode = grid.second_moment_about(&map.point);
    let inv = |m: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        let sym = (m + m.transpose()) * 0.5;
        sym.try_inverse()
            .map(|i| i / t)
            .ok_or_else(|| Error::Singular("posterior covariance".into()))
    };
    let shortcut = (grid.dim() == 1).then(|| {
        let density = (-t * map.objective - grid.log_norm_const()).exp();
        2.0 * std::f64::consts::PI * density * density / t
    });
    Ok(PosteriorInfo {
        info: inv(&omega)?,
        info_mode_centered: inv(&omega_mode)?,
        omega,
        shortcut,
    })
}
