//! Least-squares fit of the exponential semivariogram `1 - exp(-alpha h)` to
//! the empirical semivariogram of a lattice field, and the coverage study of
//! the resulting confidence intervals.

use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::inference::{
    confidence_region, evaluate_cb_posterior, info_from_posterior, limit_distribution, map_estimate, mc_derivatives,
    Contrast, GridAxis, MapEstimate, MapOptions, ParamBox, PosteriorGrid, PosteriorInfo, Prior, Resimulate,
};
use crate::seeds::{label, stream_seed};
use crate::simulate::{GrfSampler, LatticeField};
use nalgebra::{DMatrix, DVector};

/// One distinct inter-node distance, kept with its integer squared length in
/// grid units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LagClass {
    pub squared: u64,
    pub h: f64,
}

/// Distinct distances strictly shorter than the half diagonal `(n-1) sqrt(2) / 2`.
pub fn lag_classes(n: usize, spacing: f64) -> Vec<LagClass> {
    if n < 2 {
        return Vec::new();
    }
    let m = (n - 1) as u64;
    let mut squares: Vec<u64> = (0..n as u64)
        .flat_map(|a| (0..n as u64).map(move |b| a * a + b * b))
        .filter(|&d2| d2 > 0 && 2 * d2 < m * m)
        .collect();
    squares.sort_unstable();
    squares.dedup();
    squares
        .into_iter()
        .map(|squared| LagClass {
            squared,
            h: (squared as f64).sqrt() * spacing,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalVariogram {
    pub lags: Vec<f64>,
    pub gamma_hat: Vec<f64>,
    pub counts: Vec<u64>,
}

/// Semivariogram estimates `sum (X_i - X_j)^2 / (2 n_l)` by exact pair enumeration.
pub fn sample_variogram(field: &LatticeField, lags: &[LagClass]) -> Result<EmpiricalVariogram> {
    if lags.is_empty() {
        return Err(Error::invalid("no lag classes: the grid is too small"));
    }
    let n = field.n();
    let x = field.values();
    let mut sums = vec![0.0; lags.len()];
    let mut counts = vec![0u64; lags.len()];
    let ni = n as isize;
    for a in 0..ni {
        for b in (1 - ni)..ni {
            if a == 0 && b <= 0 {
                continue;
            }
            let d2 = (a * a + b * b) as u64;
            let Ok(l) = lags.binary_search_by(|c| c.squared.cmp(&d2)) else {
                continue;
            };
            let (c0, c1) = if b >= 0 { (0, ni - b) } else { (-b, ni) };
            let mut s = 0.0;
            for r in 0..(ni - a) {
                let row = (r * ni) as usize;
                let row2 = ((r + a) * ni) as usize;
                for c in c0..c1 {
                    let d = x[row + c as usize] - x[row2 + (c + b) as usize];
                    s += d * d;
                }
            }
            sums[l] += s;
            counts[l] += ((ni - a) * (c1 - c0)) as u64;
        }
    }
    let gamma_hat = sums.iter().zip(&counts).map(|(s, c)| s / (2.0 * *c as f64)).collect();
    Ok(EmpiricalVariogram {
        lags: lags.iter().map(|l| l.h).collect(),
        gamma_hat,
        counts,
    })
}

/// `U(alpha) = sum_l {gamma_hat(h_l) - (1 - exp(-alpha h_l))}^2 / 2`.
pub fn ls_contrast(vario: &EmpiricalVariogram, alpha: f64) -> f64 {
    vario
        .lags
        .iter()
        .zip(&vario.gamma_hat)
        .map(|(h, g)| (g - (1.0 - (-alpha * h).exp())).powi(2))
        .sum::<f64>()
        * 0.5
}

pub fn ls_contrast_gradient(vario: &EmpiricalVariogram, alpha: f64) -> f64 {
    -vario
        .lags
        .iter()
        .zip(&vario.gamma_hat)
        .map(|(h, g)| {
            let e = (-alpha * h).exp();
            h * e * (g - (1.0 - e))
        })
        .sum::<f64>()
}

pub fn ls_contrast_hessian(vario: &EmpiricalVariogram, alpha: f64) -> f64 {
    vario
        .lags
        .iter()
        .zip(&vario.gamma_hat)
        .map(|(h, g)| {
            let e = (-alpha * h).exp();
            h * h * e * (e + (g - (1.0 - e)))
        })
        .sum()
}

/// Least-squares variogram contrast with `t = n^2`.
#[derive(Debug, Clone)]
pub struct VariogramContrast {
    pub vario: EmpiricalVariogram,
    pub t: f64,
}

impl VariogramContrast {
    pub fn from_field(field: &LatticeField) -> Result<Self> {
        let lags = lag_classes(field.n(), field.spacing());
        Ok(Self {
            vario: sample_variogram(field, &lags)?,
            t: (field.n() * field.n()) as f64,
        })
    }
}

impl Contrast for VariogramContrast {
    fn dim(&self) -> usize {
        1
    }
    fn t(&self) -> f64 {
        self.t
    }
    fn value(&self, at: &[f64]) -> f64 {
        ls_contrast(&self.vario, at[0])
    }
    fn gradient(&self, at: &[f64]) -> Option<DVector<f64>> {
        Some(DVector::from_element(1, ls_contrast_gradient(&self.vario, at[0])))
    }
    fn hessian(&self, at: &[f64]) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_element(1, 1, ls_contrast_hessian(&self.vario, at[0])))
    }
}

/// Parametric bootstrap: fresh GRFs on the same lattice. The Cholesky factor
/// of the last requested parameter is cached.
pub struct VariogramResimulator {
    n: usize,
    spacing: f64,
    lags: Vec<LagClass>,
    cache: Mutex<Option<Arc<GrfSampler>>>,
}

impl VariogramResimulator {
    pub fn new(n: usize, spacing: f64) -> Self {
        Self {
            n,
            spacing,
            lags: lag_classes(n, spacing),
            cache: Mutex::new(None),
        }
    }

    fn sampler(&self, theta: f64) -> Result<Arc<GrfSampler>> {
        let mut guard = self.cache.lock().expect("sampler cache poisoned");
        if let Some(s) = guard.as_ref().filter(|s| s.theta() == theta) {
            return Ok(Arc::clone(s));
        }
        let s = Arc::new(GrfSampler::new(self.n, theta, self.spacing)?);
        *guard = Some(Arc::clone(&s));
        Ok(s)
    }
}

impl Resimulate for VariogramResimulator {
    type Problem = VariogramContrast;

    fn resimulate(&self, at: &[f64], seed: u64) -> Result<VariogramContrast> {
        let field = self.sampler(at[0])?.sample(seed);
        Ok(VariogramContrast {
            vario: sample_variogram(&field, &self.lags)?,
            t: (self.n * self.n) as f64,
        })
    }
}

#[derive(Debug, Clone)]
pub struct VariogramFitConfig {
    pub grid_nodes: usize,
    pub gamma_reps: usize,
    pub level: f64,
    pub seed: u64,
    pub map: MapOptions,
}

impl Default for VariogramFitConfig {
    fn default() -> Self {
        Self {
            grid_nodes: 401,
            gamma_reps: 1000,
            level: 0.95,
            seed: 0,
            map: MapOptions::default(),
        }
    }
}

/// Default prior: uniform on `[0, 4]`.
pub fn default_prior() -> Prior {
    Prior::uniform(ParamBox::new(vec![0.0], vec![4.0]).expect("static box"))
}

/// Limit law of the MAP under one choice of information estimate.
#[derive(Debug, Clone, Serialize)]
pub struct ScalarLimit {
    pub info_source: &'static str,
    pub info: f64,
    pub variance: f64,
    pub interval: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct VariogramFit {
    pub grid: PosteriorGrid,
    pub map: MapEstimate,
    pub t: f64,
    pub gamma_mc: f64,
    pub info_mc: f64,
    pub posterior_info: PosteriorInfo,
    /// Monte-Carlo information first, posterior shortcut second.
    pub limits: Vec<ScalarLimit>,
    pub gamma_reps: usize,
}

impl VariogramFit {
    pub fn info_posterior(&self) -> f64 {
        self.posterior_info.shortcut.expect("scalar parameter")
    }
}

fn scalar_limit(source: &'static str, map: &MapEstimate, info: f64, gamma: f64, t: f64, level: f64) -> Result<ScalarLimit> {
    let dist = limit_distribution(
        &map.point,
        &DMatrix::from_element(1, 1, info),
        &DMatrix::from_element(1, 1, gamma),
        t,
    )?;
    let region = confidence_region(&dist, level)?;
    Ok(ScalarLimit {
        info_source: source,
        info,
        variance: dist.covariance[(0, 0)],
        interval: region.intervals[0],
    })
}

/// Posterior, MAP, Monte-Carlo `Gamma` and `I` at the MAP, posterior-shape `I`,
/// and the limit variance `Gamma / (t I^2)` under both information estimates.
pub fn run_variogram_fit(field: &LatticeField, prior: &Prior, config: &VariogramFitConfig) -> Result<VariogramFit> {
    let problem = VariogramContrast::from_field(field)?;
    let resim = VariogramResimulator::new(field.n(), field.spacing());
    fit_with(&problem, &resim, prior, config)
}

fn fit_with(
    problem: &VariogramContrast,
    resim: &VariogramResimulator,
    prior: &Prior,
    config: &VariogramFitConfig,
) -> Result<VariogramFit> {
    let support = prior.support();
    let grid = evaluate_cb_posterior(problem, prior, &GridAxis::spanning(support, config.grid_nodes))?;
    let map = map_estimate(problem, prior, support, &config.map)?;
    let t = problem.t;
    let posterior_info = info_from_posterior(&grid, &map, t)?;
    let mc = mc_derivatives(resim, &map.point, config.gamma_reps, config.seed)?;
    let gamma_mc = mc.gamma()[(0, 0)];
    let info_mc = mc.info()[(0, 0)];
    let info_post = posterior_info.shortcut.expect("scalar parameter");
    let limits = vec![
        scalar_limit("monte_carlo", &map, info_mc, gamma_mc, t, config.level)?,
        scalar_limit("posterior", &map, info_post, gamma_mc, t, config.level)?,
    ];
    Ok(VariogramFit {
        grid,
        map,
        t,
        gamma_mc,
        info_mc,
        posterior_info,
        limits,
        gamma_reps: config.gamma_reps,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverageRecord {
    pub rep: usize,
    pub seed: u64,
    pub map: Option<f64>,
    /// Interval with Monte-Carlo information.
    pub ci_mc: Option<(f64, f64)>,
    /// Interval with posterior-shortcut information.
    pub ci_posterior: Option<(f64, f64)>,
    pub error: Option<String>,
}

impl CoverageRecord {
    pub fn covered_mc(&self, theta: f64) -> Option<bool> {
        self.ci_mc.map(|iv| covers(iv, theta))
    }
    pub fn covered_posterior(&self, theta: f64) -> Option<bool> {
        self.ci_posterior.map(|iv| covers(iv, theta))
    }
}

pub fn covers(interval: (f64, f64), theta: f64) -> bool {
    interval.0 <= theta && theta <= interval.1
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverageSummary {
    pub theta_true: f64,
    pub n: usize,
    pub outer_reps: usize,
    pub gamma_reps: usize,
    pub master_seed: u64,
    pub failures: usize,
    pub rate_mc: f64,
    pub se_mc: f64,
    pub rate_posterior: f64,
    pub se_posterior: f64,
    pub records: Vec<CoverageRecord>,
}

fn rate_and_se(hits: impl Iterator<Item = bool>) -> (f64, f64) {
    let (mut k, mut n) = (0usize, 0usize);
    for h in hits {
        n += 1;
        k += h as usize;
    }
    let p = k as f64 / n.max(1) as f64;
    (p, (p * (1.0 - p) / n.max(1) as f64).sqrt())
}

/// Repeat simulate-fit-interval `outer_reps` times at `theta_true` and report
/// how often each 95% interval covers the truth.
pub fn coverage_experiment(
    theta_true: f64,
    n: usize,
    outer_reps: usize,
    gamma_reps: usize,
    master_seed: u64,
) -> Result<CoverageSummary> {
    if outer_reps < 50 {
        return Err(Error::invalid("coverage needs at least 50 outer replications"));
    }
    let truth = GrfSampler::new(n, theta_true, 1.0)?;
    let prior = default_prior();
    let records: Vec<CoverageRecord> = (0..outer_reps)
        .into_par_iter()
        .map(|rep| {
            let seed = stream_seed(master_seed, &[label::OUTER, rep as u64]);
            let config = VariogramFitConfig {
                gamma_reps,
                seed: stream_seed(seed, &[label::RESIMULATE]),
                ..Default::default()
            };
            let result = VariogramContrast::from_field(&truth.sample(seed)).and_then(|problem| {
                fit_with(&problem, &VariogramResimulator::new(n, 1.0), &prior, &config)
            });
            match result {
                Ok(fit) => CoverageRecord {
                    rep,
                    seed,
                    map: Some(fit.map.point[0]),
                    ci_mc: Some(fit.limits[0].interval),
                    ci_posterior: Some(fit.limits[1].interval),
                    error: None,
                },
                Err(e) => CoverageRecord {
                    rep,
                    seed,
                    map: None,
                    ci_mc: None,
                    ci_posterior: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let failures = records.iter().filter(|r| r.error.is_some()).count();
    if failures as f64 > 0.05 * outer_reps as f64 {
        return Err(Error::TooManyFailures {
            failed: failures,
            total: outer_reps,
        });
    }
    let (rate_mc, se_mc) = rate_and_se(records.iter().filter_map(|r| r.covered_mc(theta_true)));
    let (rate_posterior, se_posterior) = rate_and_se(records.iter().filter_map(|r| r.covered_posterior(theta_true)));
    Ok(CoverageSummary {
        theta_true,
        n,
        outer_reps,
        gamma_reps,
        master_seed,
        failures,
        rate_mc,
        se_mc,
        rate_posterior,
        se_posterior,
        records,
    })
}
