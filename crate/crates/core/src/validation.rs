//! Simulation and numerical oracles for the closed-form pieces: moment
//! formulas, their covariance, `kappa`, the gradient-variance identity of the
//! moment contrast, and every analytic derivative.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::autologistic::PseudoLikelihood;
use crate::error::{Error, Result};
use crate::inference::{
    finite_difference_gradient, finite_difference_hessian, mc_estimate_gamma, Contrast, FdStep,
};
use crate::roughness::{
    kappa_adaptive, kappa_tensor_gauss, sample_moments, RoughnessModel, RoughnessParams,
    RoughnessResimulator, WlsContrast, KAPPA_REFERENCE, KAPPA_SCHEME_TOLERANCE,
};
use crate::seeds::{label, rng_from_seed, stream_seed};
use crate::simulate::{
    simulate_grf_exponential, simulate_line_transect, simulate_markov_field, simulate_transect_sample,
    TransectDesign,
};
use crate::variogram::VariogramContrast;

pub const ORACLES: [&str; 5] = ["kappa", "moments", "variance", "gamma-info", "derivatives"];

/// One compared quantity: passes when `|measured - expected| <= tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCheck {
    pub oracle: String,
    pub quantity: String,
    pub measured: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl OracleCheck {
    fn new(oracle: &str, quantity: impl Into<String>, measured: f64, expected: f64, tolerance: f64) -> Self {
        Self {
            oracle: oracle.into(),
            quantity: quantity.into(),
            measured,
            expected,
            tolerance,
            passed: (measured - expected).abs() <= tolerance,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationConfig {
    pub seed: u64,
    /// Parameter points for the simulation oracles.
    pub points: Vec<[f64; 2]>,
    /// Total transect length for the mean oracle, split over `moment_transects`.
    pub moment_length_mm: f64,
    pub moment_transects: usize,
    pub variance_reps: usize,
    pub variance_length_mm: f64,
    pub fine_spacing_mm: f64,
    pub gamma_reps: usize,
    pub gamma_design: TransectDesign,
    /// Allowed relative gap between the MC gradient variance and `J'V^-1J`.
    pub gamma_tolerance: f64,
    pub derivative_points: usize,
    /// Width of the simulation bands in Monte-Carlo standard errors.
    pub z: f64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            points: vec![[20.0, 3.0], [46.6, 3.28]],
            moment_length_mm: 1.2e6,
            moment_transects: 200,
            variance_reps: 2000,
            variance_length_mm: 2000.0,
            fine_spacing_mm: 0.1,
            gamma_reps: 1000,
            gamma_design: TransectDesign {
                count: 4,
                length_mm: 2000.0,
                spacing_mm: 0.1,
            },
            gamma_tolerance: 0.15,
            derivative_points: 10,
            z: 3.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub kappa_used: f64,
    pub checks: Vec<OracleCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn params(p: [f64; 2]) -> Result<RoughnessParams> {
    RoughnessParams::new(p[0], p[1])
}

pub fn kappa_oracle() -> Result<Vec<OracleCheck>> {
    let a = kappa_tensor_gauss();
    let b = kappa_adaptive()?;
    let rel = (a - b).abs() / a.abs().max(b.abs());
    Ok(vec![
        OracleCheck::new("kappa", "relative gap between quadrature schemes", rel, 0.0, KAPPA_SCHEME_TOLERANCE),
        OracleCheck::new("kappa", "tensor Gauss-Legendre vs recorded value", a, KAPPA_REFERENCE, 1e-9 * KAPPA_REFERENCE),
    ])
}

/// Sample mean and mean square against the closed-form expectations.
pub fn moment_oracle(config: &ValidationConfig) -> Result<Vec<OracleCheck>> {
    let model = RoughnessModel::with_kappa(0.0);
    let mut checks = Vec::new();
    let per = config.moment_length_mm / config.moment_transects as f64;
    for (pi, &p) in config.points.iter().enumerate() {
        let e = model.expected(&params(p)?);
        let moments: Vec<(f64, f64)> = (0..config.moment_transects)
            .into_par_iter()
            .map(|k| {
                let seed = stream_seed(config.seed, &[label::ORACLE, 1, pi as u64, k as u64]);
                let h = simulate_line_transect(p[0], p[1], per, 2.0, seed)?;
                let n = h.len() as f64;
                Ok((h.iter().sum::<f64>() / n, h.iter().map(|v| v * v).sum::<f64>() / n))
            })
            .collect::<Result<_>>()?;
        for (k, name) in ["E1", "E2"].into_iter().enumerate() {
            let xs: Vec<f64> = moments.iter().map(|m| if k == 0 { m.0 } else { m.1 }).collect();
            let (mean, se) = mean_and_se(&xs);
            checks.push(OracleCheck::new("moments", format!("{name} at ({}, {})", p[0], p[1]), mean, e[k], config.z * se));
        }
    }
    Ok(checks)
}

/// `nu * cov(mu_hat)` over independent long transects against `V`.
pub fn variance_oracle(model: &RoughnessModel, config: &ValidationConfig) -> Result<Vec<OracleCheck>> {
    let mut checks = Vec::new();
    let len = config.variance_length_mm;
    for (pi, &p) in config.points.iter().enumerate() {
        let v = model.variance(&params(p)?);
        let reps: Vec<[f64; 2]> = (0..config.variance_reps)
            .into_par_iter()
            .map(|k| {
                let seed = stream_seed(config.seed, &[label::ORACLE, 2, pi as u64, k as u64]);
                let h = simulate_line_transect(p[0], p[1], len, config.fine_spacing_mm, seed)?;
                let n = h.len() as f64;
                Ok([h.iter().sum::<f64>() / n, h.iter().map(|v| v * v).sum::<f64>() / n])
            })
            .collect::<Result<_>>()?;
        let n = reps.len() as f64;
        let mean = [0, 1].map(|i| reps.iter().map(|r| r[i]).sum::<f64>() / n);
        for (i, j, name) in [(0, 0, "V11"), (0, 1, "V12"), (1, 1, "V22")] {
            let prods: Vec<f64> = reps.iter().map(|r| len * (r[i] - mean[i]) * (r[j] - mean[j])).collect();
            let (m, se) = mean_and_se(&prods);
            let est = m * n / (n - 1.0);
            checks.push(OracleCheck::new(
                "variance",
                format!("{name} at ({}, {})", p[0], p[1]),
                est,
                v[(i, j)],
                config.z * se,
            ));
        }
    }
    Ok(checks)
}

/// Monte-Carlo gradient variance of the moment contrast at the truth
/// against `J' V^-1 J`, entrywise.
pub fn gamma_info_oracle(model: &RoughnessModel, config: &ValidationConfig) -> Result<Vec<OracleCheck>> {
    let mut checks = Vec::new();
    let sim = RoughnessResimulator {
        model: *model,
        design: config.gamma_design,
    };
    for (pi, &p) in config.points.iter().enumerate() {
        let info = model.information(&params(p)?)?;
        let seed = stream_seed(config.seed, &[label::ORACLE, 3, pi as u64]);
        let gamma = mc_estimate_gamma(&sim, &p, config.gamma_reps, seed)?;
        for (i, j, name) in [(0, 0, "11"), (0, 1, "12"), (1, 1, "22")] {
            checks.push(OracleCheck::new(
                "gamma-info",
                format!("Gamma{name} at ({}, {})", p[0], p[1]),
                gamma[(i, j)],
                info[(i, j)],
                config.gamma_tolerance * info[(i, j)].abs(),
            ));
        }
    }
    Ok(checks)
}

/// Largest entrywise gap between two arrays relative to the largest analytic entry.
pub fn relative_gap(analytic: &[f64], numeric: &[f64]) -> f64 {
    let scale = analytic.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    analytic.iter().zip(numeric).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale
}

pub const GRADIENT_TOLERANCE: f64 = 1e-5;
pub const HESSIAN_TOLERANCE: f64 = 1e-3;

fn derivative_checks<C: Contrast>(case: &str, problem: &C, points: &[Vec<f64>]) -> Result<Vec<OracleCheck>> {
    let gstep = FdStep {
        relative: 1e-6,
        floor: 1e-8,
    };
    let hstep = FdStep {
        relative: 1e-4,
        floor: 1e-6,
    };
    let mut worst_g = 0.0f64;
    let mut worst_h = 0.0f64;
    for at in points {
        let g = problem
            .gradient(at)
            .ok_or_else(|| Error::invalid(format!("{case} contrast has no analytic gradient at {at:?}")))?;
        let h = problem
            .hessian(at)
            .ok_or_else(|| Error::invalid(format!("{case} contrast has no analytic Hessian at {at:?}")))?;
        let fg = finite_difference_gradient(problem, at, gstep)?;
        let fh = finite_difference_hessian(problem, at, hstep)?;
        worst_g = worst_g.max(relative_gap(g.as_slice(), fg.as_slice()));
        worst_h = worst_h.max(relative_gap(h.as_slice(), fh.as_slice()));
    }
    Ok(vec![
        OracleCheck::new("derivatives", format!("{case} gradient max relative error"), worst_g, 0.0, GRADIENT_TOLERANCE),
        OracleCheck::new("derivatives", format!("{case} Hessian max relative error"), worst_h, 0.0, HESSIAN_TOLERANCE),
    ])
}

fn probe_points(seed: u64, count: usize, lo: &[f64], hi: &[f64]) -> Vec<Vec<f64>> {
    let mut rng = rng_from_seed(seed);
    (0..count)
        .map(|_| lo.iter().zip(hi).map(|(l, h)| l + (h - l) * rng.random::<f64>()).collect())
        .collect()
}

/// Analytic gradients and Hessians of the three case contrasts against
/// central differences at random points.
pub fn derivative_oracle(model: &RoughnessModel, config: &ValidationConfig) -> Result<Vec<OracleCheck>> {
    let seed = |k: u64| stream_seed(config.seed, &[label::PROBE, k]);
    let count = config.derivative_points;
    let mut checks = Vec::new();

    let field = simulate_grf_exponential(20, 1.0, seed(0))?;
    let vario = VariogramContrast::from_field(&field)?;
    checks.extend(derivative_checks("variogram", &vario, &probe_points(seed(1), count, &[0.2], &[4.0]))?);

    let field = simulate_markov_field(20, 0.0, 0.3, 100, seed(2))?;
    let pl = PseudoLikelihood::from_field(&field)?;
    checks.extend(derivative_checks("markov", &pl, &probe_points(seed(3), count, &[-1.5, -1.5], &[1.5, 1.5]))?);

    let sample = simulate_transect_sample(46.6, 3.28, &TransectDesign::default(), seed(4))?;
    let wls = WlsContrast::new(*model, sample_moments(&sample));
    checks.extend(derivative_checks("roughness", &wls, &probe_points(seed(5), count, &[10.0, 2.0], &[100.0, 5.0]))?);
    Ok(checks)
}

/// Runs one named oracle, or all of them when `only` is `None`.
pub fn run_validation(only: Option<&str>, model: &RoughnessModel, config: &ValidationConfig) -> Result<ValidationReport> {
    if let Some(name) = only {
        if !ORACLES.contains(&name) {
            return Err(Error::invalid(format!("unknown oracle {name:?}; choose from {}", ORACLES.join(", "))));
        }
    }
    let mut checks = Vec::new();
    for name in ORACLES.into_iter().filter(|n| only.is_none_or(|o| o == *n)) {
        checks.extend(match name {
            "kappa" => kappa_oracle()?,
            "moments" => moment_oracle(config)?,
            "variance" => variance_oracle(model, config)?,
            "gamma-info" => gamma_info_oracle(model, config)?,
            _ => derivative_oracle(model, config)?,
        });
    }
    Ok(ValidationReport {
        kappa_used: model.kappa(),
        checks,
    })
}
