//! JSON report schemas. Matrices are written as arrays of rows.

use cbpost::inference::{ConfidenceRegion, LimitDistribution, MapEstimate, PosteriorInfo};
use cbpost::nalgebra::DMatrix;
use serde::Serialize;

pub fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ProvenanceJson {
    pub version: String,
    pub command: String,
    pub seed: u64,
    /// SHA-256 of the recorded command line after config merging.
    pub config_hash: String,
}

#[derive(Debug, Serialize)]
pub struct MapJson {
    pub point: Vec<f64>,
    pub objective: f64,
    pub refined: bool,
    pub on_boundary: bool,
}

impl From<&MapEstimate> for MapJson {
    fn from(m: &MapEstimate) -> Self {
        Self {
            point: m.point.to_vec(),
            objective: m.objective,
            refined: m.refined,
            on_boundary: m.on_boundary,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct PosteriorInfoJson {
    /// Posterior covariance about the posterior mean.
    pub omega: Vec<Vec<f64>>,
    /// `omega^-1 / t`.
    pub info: Vec<Vec<f64>>,
    /// Same, with the second moment taken about the MAP.
    pub info_mode_centered: Vec<Vec<f64>>,
    /// `2 pi p(map)^2 / t`; one-parameter models only.
    pub shortcut: Option<f64>,
}

impl From<&PosteriorInfo> for PosteriorInfoJson {
    fn from(p: &PosteriorInfo) -> Self {
        Self {
            omega: rows(&p.omega),
            info: rows(&p.info),
            info_mode_centered: rows(&p.info_mode_centered),
            shortcut: p.shortcut,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct LimitJson {
    pub mean: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
}

impl From<&LimitDistribution> for LimitJson {
    fn from(l: &LimitDistribution) -> Self {
        Self {
            mean: l.mean.to_vec(),
            covariance: rows(&l.covariance),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RegionJson {
    pub level: f64,
    pub intervals: Vec<(f64, f64)>,
    pub center: Vec<f64>,
    /// Ellipsoid `{x : (x - c)' shape^-1 (x - c) <= radius_sq}`.
    pub shape: Vec<Vec<f64>>,
    pub radius_sq: f64,
}

impl From<&ConfidenceRegion> for RegionJson {
    fn from(r: &ConfidenceRegion) -> Self {
        Self {
            level: r.level,
            intervals: r.intervals.clone(),
            center: r.center.to_vec(),
            shape: rows(&r.shape),
            radius_sq: r.radius_sq,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Diagnostics {
    pub boundary_warning: bool,
    pub failed_replications: usize,
}

#[derive(Debug, Serialize)]
pub struct ScalarLimitJson {
    pub info_source: String,
    pub info: f64,
    pub variance: f64,
    pub interval: (f64, f64),
}

#[derive(Debug, Serialize)]
pub struct VariogramReport {
    pub schema: &'static str,
    pub provenance: ProvenanceJson,
    pub input: String,
    pub n: usize,
    pub t: f64,
    pub prior_box: Vec<(f64, f64)>,
    pub map: MapJson,
    pub gamma_reps: usize,
    pub gamma_mc: f64,
    pub info_mc: f64,
    pub posterior_info: PosteriorInfoJson,
    /// Monte-Carlo information first, posterior shortcut second.
    pub limits: Vec<ScalarLimitJson>,
    pub level: f64,
    pub posterior_file: String,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Serialize)]
pub struct MarkovReport {
    pub schema: &'static str,
    pub provenance: ProvenanceJson,
    pub input: String,
    pub n: usize,
    pub t: f64,
    pub prior_box: Vec<(f64, f64)>,
    pub map: MapJson,
    pub reps: usize,
    pub sweeps: usize,
    pub gamma_mc: Vec<Vec<f64>>,
    pub info_mc: Vec<Vec<f64>>,
    pub posterior_info: PosteriorInfoJson,
    pub limit_mc: LimitJson,
    pub limit_posterior: LimitJson,
    pub region: RegionJson,
    pub posterior_file: String,
    pub marginal_files: Vec<String>,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Serialize)]
pub struct RoughnessReport {
    pub schema: &'static str,
    pub provenance: ProvenanceJson,
    pub input: String,
    pub transects: usize,
    pub spacing_mm: f64,
    pub detrend_bandwidth_mm: Option<f64>,
    pub m1: f64,
    pub m2: f64,
    pub nu_a_mm: f64,
    pub kappa: f64,
    pub kappa_overridden: bool,
    pub prior_box: Vec<(f64, f64)>,
    pub grid_box: Vec<(f64, f64)>,
    pub map: MapJson,
    pub t: f64,
    pub level: f64,
    pub posterior_intervals: Vec<(f64, f64)>,
    pub gaussian_intervals: Vec<(f64, f64)>,
    pub info_moments: Vec<Vec<f64>>,
    pub posterior_info: PosteriorInfoJson,
    pub limit: LimitJson,
    pub region: RegionJson,
    pub posterior_file: String,
    pub marginal_files: Vec<String>,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Serialize)]
pub struct CoverageReport {
    pub schema: &'static str,
    pub provenance: ProvenanceJson,
    pub theta_true: f64,
    pub n: usize,
    pub outer_reps: usize,
    pub gamma_reps: usize,
    pub failures: usize,
    pub rate_mc: f64,
    pub se_mc: f64,
    pub rate_posterior: f64,
    pub se_posterior: f64,
    pub records_file: String,
}

#[derive(Debug, Serialize)]
pub struct ValidationJson<'a> {
    pub schema: &'static str,
    pub provenance: ProvenanceJson,
    pub kappa_used: f64,
    pub kappa_overridden: bool,
    pub passed: bool,
    pub checks: &'a [cbpost::validation::OracleCheck],
}
