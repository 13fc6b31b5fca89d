//! Pseudo-likelihood fitting of the two-state autologistic field with four
//! nearest neighbours, `P(X_i = 1 | s) = logistic(theta1 + theta2 s)` where
//! `s` is the number of neighbours in state 1.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::inference::{
    confidence_region, evaluate_cb_posterior, info_from_posterior, limit_distribution, map_estimate, mc_derivatives,
    ConfidenceRegion, Contrast, GridAxis, LimitDistribution, MapEstimate, MapOptions, ParamBox, PosteriorGrid,
    PosteriorInfo, Prior, Resimulate,
};
use crate::simulate::{simulate_markov_field, LatticeField, DEFAULT_SWEEPS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AutologisticParams {
    /// Field effect.
    pub theta1: f64,
    /// Neighbour interaction.
    pub theta2: f64,
}

impl AutologisticParams {
    pub fn new(theta1: f64, theta2: f64) -> Self {
        Self { theta1, theta2 }
    }

    fn logit(&self, s: u32) -> f64 {
        self.theta1 + self.theta2 * s as f64
    }
}

/// `log(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `P(X_i = x | neighbour sum s)`.
pub fn conditional_prob(x: u8, neighbor_sum: u32, params: &AutologisticParams) -> f64 {
    let p1 = logistic(params.logit(neighbor_sum));
    if x == 1 {
        p1
    } else {
        logistic(-params.logit(neighbor_sum))
    }
}

fn log_conditional(x: u8, s: u32, params: &AutologisticParams) -> f64 {
    let eta = params.logit(s);
    if x == 1 {
        -softplus(-eta)
    } else {
        -softplus(eta)
    }
}

fn neighbor_sum(field: &LatticeField, r: usize, c: usize) -> u32 {
    (field.get(r - 1, c) + field.get(r + 1, c) + field.get(r, c - 1) + field.get(r, c + 1)) as u32
}

fn check_interior(field: &LatticeField) -> Result<()> {
    if field.n() < 3 {
        return Err(Error::invalid("pseudo-likelihood needs n >= 3 (no interior sites)"));
    }
    if !field.is_binary() {
        return Err(Error::invalid("pseudo-likelihood needs a binary field"));
    }
    Ok(())
}

/// Score vector `Z_i = (x_i - p(s_i)) (1, s_i)'` of interior site `(row, col)`.
pub fn score_vector(field: &LatticeField, params: &AutologisticParams, row: usize, col: usize) -> Result<[f64; 2]> {
    let n = field.n();
    if row == 0 || col == 0 || row + 1 >= n || col + 1 >= n {
        return Err(Error::invalid(format!("site ({row}, {col}) is not interior")));
    }
    let s = neighbor_sum(field, row, col);
    let resid = field.get(row, col) - conditional_prob(1, s, params);
    Ok([resid, resid * s as f64])
}

/// Pseudo-likelihood contrast summarized by the counts of (state, neighbour
/// sum) pairs over interior sites; `t = (n - 2)^2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PseudoLikelihood {
    counts: [[u64; 5]; 2],
    sites: u64,
}

impl PseudoLikelihood {
    pub fn from_field(field: &LatticeField) -> Result<Self> {
        check_interior(field)?;
        let n = field.n();
        let mut counts = [[0u64; 5]; 2];
        for r in 1..n - 1 {
            for c in 1..n - 1 {
                counts[field.get(r, c) as usize][neighbor_sum(field, r, c) as usize] += 1;
            }
        }
        Ok(Self {
            counts,
            sites: ((n - 2) * (n - 2)) as u64,
        })
    }

    /// Interior site counts indexed by `[state][neighbour sum]`.
    pub fn counts(&self) -> &[[u64; 5]; 2] {
        &self.counts
    }

    fn cells(&self) -> impl Iterator<Item = (u8, u32, f64)> + '_ {
        (0..2u8).flat_map(move |x| {
            (0..5u32)
                .filter(move |&s| self.counts[x as usize][s as usize] > 0)
                .map(move |s| (x, s, self.counts[x as usize][s as usize] as f64))
        })
    }

    pub fn value_at(&self, params: &AutologisticParams) -> f64 {
        -self.cells().map(|(x, s, k)| k * log_conditional(x, s, params)).sum::<f64>() / self.sites as f64
    }

    /// `-(1/m) sum Z_i`.
    pub fn gradient_at(&self, params: &AutologisticParams) -> [f64; 2] {
        let mut g = [0.0; 2];
        for (x, s, k) in self.cells() {
            let resid = x as f64 - conditional_prob(1, s, params);
            g[0] -= k * resid;
            g[1] -= k * resid * s as f64;
        }
        let m = self.sites as f64;
        [g[0] / m, g[1] / m]
    }

    /// `(1/m) sum p(1-p) (1, s)(1, s)'`.
    pub fn hessian_at(&self, params: &AutologisticParams) -> [[f64; 2]; 2] {
        let mut h = [[0.0; 2]; 2];
        for (_, s, k) in self.cells() {
            let p = conditional_prob(1, s, params);
            let w = k * p * (1.0 - p);
            let s = s as f64;
            h[0][0] += w;
            h[0][1] += w * s;
            h[1][1] += w * s * s;
        }
        let m = self.sites as f64;
        h[1][0] = h[0][1];
        h.map(|row| row.map(|v| v / m))
    }
}

impl Contrast for PseudoLikelihood {
    fn dim(&self) -> usize {
        2
    }
    fn t(&self) -> f64 {
        self.sites as f64
    }
    fn value(&self, at: &[f64]) -> f64 {
        self.value_at(&AutologisticParams::new(at[0], at[1]))
    }
    fn gradient(&self, at: &[f64]) -> Option<DVector<f64>> {
        Some(DVector::from_row_slice(&self.gradient_at(&AutologisticParams::new(at[0], at[1]))))
    }
    fn hessian(&self, at: &[f64]) -> Option<DMatrix<f64>> {
        let h = self.hessian_at(&AutologisticParams::new(at[0], at[1]));
        Some(DMatrix::from_row_slice(2, 2, &[h[0][0], h[0][1], h[1][0], h[1][1]]))
    }
}

pub fn pseudolik_contrast(field: &LatticeField, params: &AutologisticParams) -> Result<f64> {
    Ok(PseudoLikelihood::from_field(field)?.value_at(params))
}

pub fn pseudolik_gradient(field: &LatticeField, params: &AutologisticParams) -> Result<[f64; 2]> {
    Ok(PseudoLikelihood::from_field(field)?.gradient_at(params))
}

pub fn pseudolik_hessian(field: &LatticeField, params: &AutologisticParams) -> Result<[[f64; 2]; 2]> {
    Ok(PseudoLikelihood::from_field(field)?.hessian_at(params))
}

/// Fresh Gibbs-sampled fields on an `n x n` lattice.
#[derive(Debug, Clone, Copy)]
pub struct MarkovResimulator {
    pub n: usize,
    pub sweeps: usize,
}

impl Resimulate for MarkovResimulator {
    type Problem = PseudoLikelihood;

    fn resimulate(&self, at: &[f64], seed: u64) -> Result<PseudoLikelihood> {
        PseudoLikelihood::from_field(&simulate_markov_field(self.n, at[0], at[1], self.sweeps, seed)?)
    }
}

/// Default prior: uniform on `[-1.5, 1.5]^2`.
pub fn default_prior() -> Prior {
    Prior::uniform(ParamBox::new(vec![-1.5, -1.5], vec![1.5, 1.5]).expect("static box"))
}

#[derive(Debug, Clone)]
pub struct MarkovFitConfig {
    pub grid_nodes: usize,
    pub reps: usize,
    pub sweeps: usize,
    pub level: f64,
    pub seed: u64,
    pub map: MapOptions,
}

impl Default for MarkovFitConfig {
    fn default() -> Self {
        Self {
            grid_nodes: 101,
            reps: 1000,
            sweeps: DEFAULT_SWEEPS,
            level: 0.95,
            seed: 0,
            map: MapOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MarkovFit {
    pub grid: PosteriorGrid,
    pub map: MapEstimate,
    pub t: f64,
    pub gamma_mc: DMatrix<f64>,
    pub info_mc: DMatrix<f64>,
    pub posterior_info: PosteriorInfo,
    /// Sandwich with Monte-Carlo information.
    pub limit: LimitDistribution,
    /// Sandwich with posterior-shape information.
    pub limit_posterior: LimitDistribution,
    pub region: ConfidenceRegion,
    pub reps: usize,
}

pub fn run_markov_fit(field: &LatticeField, prior: &Prior, config: &MarkovFitConfig) -> Result<MarkovFit> {
    let problem = PseudoLikelihood::from_field(field)?;
    let support = prior.support();
    let grid = evaluate_cb_posterior(&problem, prior, &GridAxis::spanning(support, config.grid_nodes))?;
    let map = map_estimate(&problem, prior, support, &config.map)?;
    let t = problem.t();
    let posterior_info = info_from_posterior(&grid, &map, t)?;
    let resim = MarkovResimulator {
        n: field.n(),
        sweeps: config.sweeps,
    };
    let mc = mc_derivatives(&resim, &map.point, config.reps, config.seed)?;
    let gamma_mc = mc.gamma();
    let info_mc = mc.info();
    let limit = limit_distribution(&map.point, &info_mc, &gamma_mc, t)?;
    let limit_posterior = limit_distribution(&map.point, &posterior_info.info, &gamma_mc, t)?;
    let region = confidence_region(&limit, config.level)?;
    Ok(MarkovFit {
        grid,
        map,
        t,
        gamma_mc,
        info_mc,
        posterior_info,
        limit,
        limit_posterior,
        region,
        reps: config.reps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conditional_values() {
        let zero = AutologisticParams::new(0.0, 0.0);
        for s in 0..5 {
            assert_eq!(conditional_prob(1, s, &zero), 0.5);
        }
        let p = AutologisticParams::new(0.0, 0.3);
        let expected = 1.2f64.exp() / (1.0 + 1.2f64.exp());
        assert!((conditional_prob(1, 4, &p) - expected).abs() < 1e-15);
        assert!((conditional_prob(1, 4, &p) - 0.76852).abs() < 1e-5);
        let extreme = AutologisticParams::new(800.0, -3.0);
        for s in 0..5 {
            let total = conditional_prob(0, s, &extreme) + conditional_prob(1, s, &extreme);
            assert!((total - 1.0).abs() < 1e-15);
            assert!(log_conditional(0, s, &extreme).is_finite());
        }
    }

    #[test]
    fn all_zero_field_contrast_and_scores() {
        let f = LatticeField::binary(6, vec![0.0; 36]).unwrap();
        let zero = AutologisticParams::new(0.0, 0.0);
        assert!((pseudolik_contrast(&f, &zero).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(score_vector(&f, &zero, 2, 3).unwrap(), [-0.5, 0.0]);
        assert!(score_vector(&f, &zero, 0, 3).is_err());
        assert_eq!(pseudolik_gradient(&f, &zero).unwrap(), [0.5, 0.0]);
    }

    #[test]
    fn gradient_is_minus_mean_score() {
        let f = simulate_markov_field(9, 0.1, 0.4, 30, 5).unwrap();
        let p = AutologisticParams::new(-0.2, 0.35);
        let mut sum = [0.0; 2];
        for r in 1..8 {
            for c in 1..8 {
                let z = score_vector(&f, &p, r, c).unwrap();
                sum[0] += z[0];
                sum[1] += z[1];
            }
        }
        let g = pseudolik_gradient(&f, &p).unwrap();
        assert!((g[0] + sum[0] / 49.0).abs() < 1e-14);
        assert!((g[1] + sum[1] / 49.0).abs() < 1e-14);
    }

    #[test]
    fn contrast_decreases_in_theta1_on_all_ones() {
        let f = LatticeField::binary(5, vec![1.0; 25]).unwrap();
        let mut prev = f64::INFINITY;
        for k in 0..20 {
            let v = pseudolik_contrast(&f, &AutologisticParams::new(-2.0 + 0.3 * k as f64, 0.2)).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn tiny_fields_are_rejected() {
        let f = LatticeField::binary(2, vec![0.0; 4]).unwrap();
        assert!(pseudolik_contrast(&f, &AutologisticParams::new(0.0, 0.0)).is_err());
        let g = LatticeField::new(3, vec![0.5; 9], 1.0).unwrap();
        assert!(PseudoLikelihood::from_field(&g).is_err());
    }
}
