use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cbpost::autologistic::{run_markov_fit, MarkovFitConfig};
use cbpost::inference::{ParamBox, PosteriorGrid, Prior};
use cbpost::io::{
    atomic_write, read_field_csv, write_field_csv, write_json, write_marginal_csv, write_posterior_csv,
    write_transect_sample, Provenance,
};
use cbpost::roughness::{
    detrend_sample, load_transects, run_roughness_fit, sample_moments, RoughnessFitConfig, RoughnessModel,
};
use cbpost::seeds::{label, stream_seed};
use cbpost::simulate::{
    sample_transects, simulate_cylinder_surface, simulate_markov_field, simulate_transect_sample, GrfSampler, Rect,
    TransectDesign,
};
use cbpost::validation::{run_validation, ValidationConfig};
use cbpost::variogram::{coverage_experiment, run_variogram_fit, VariogramFitConfig};
use sha2::{Digest, Sha256};

use crate::report::*;
use crate::{CoverageArgs, FitCmd, SimulateCmd, ValidateArgs};

/// Fault-injection hook: replaces the quadrature value of `kappa`.
pub const KAPPA_OVERRIDE_ENV: &str = "CBPOST_KAPPA_OVERRIDE";

#[derive(Debug)]
pub enum CliError {
    Core(cbpost::Error),
    Usage(String),
}

impl CliError {
    pub fn is_usage(&self) -> bool {
        match self {
            CliError::Usage(_) => true,
            CliError::Core(e) => e.is_input_error() || matches!(e, cbpost::Error::InvalidParameter(_)),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(m) => f.write_str(m),
        }
    }
}

impl From<cbpost::Error> for CliError {
    fn from(e: cbpost::Error) -> Self {
        CliError::Core(e)
    }
}

type Outcome = Result<ExitCode, CliError>;

pub struct Context {
    out: PathBuf,
    seed: u64,
    command: String,
    config_hash: String,
}

impl Context {
    pub fn new(out: &Path, seed: u64, args: &[String]) -> Self {
        let command = crate::config::normalized_command(args);
        let config_hash = hex::encode(Sha256::digest(command.as_bytes()));
        Self {
            out: out.to_path_buf(),
            seed,
            command,
            config_hash,
        }
    }

    fn provenance(&self) -> Provenance {
        Provenance::new(self.command.clone(), self.seed)
    }

    fn provenance_json(&self) -> ProvenanceJson {
        let p = self.provenance();
        ProvenanceJson {
            version: p.version,
            command: p.command,
            seed: p.seed,
            config_hash: self.config_hash.clone(),
        }
    }

    fn out_dir(&self) -> Result<&Path, CliError> {
        fs::create_dir_all(&self.out).map_err(|e| cbpost::Error::Io {
            path: self.out.clone(),
            source: e,
        })?;
        Ok(&self.out)
    }

    fn path(&self, name: &str) -> Result<PathBuf, CliError> {
        Ok(self.out_dir()?.join(name))
    }
}

fn require_file(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Core(cbpost::Error::Io {
            path: path.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "input file not found"),
        }))
    }
}

fn prior_box(values: &[f64]) -> Result<ParamBox, CliError> {
    let lower = values.iter().step_by(2).copied().collect();
    let upper = values.iter().skip(1).step_by(2).copied().collect();
    ParamBox::new(lower, upper).map_err(|e| CliError::Usage(format!("--prior: {e}")))
}

fn box_pairs(b: &ParamBox) -> Vec<(f64, f64)> {
    b.lower().iter().copied().zip(b.upper().iter().copied()).collect()
}

fn grid_pairs(g: &PosteriorGrid) -> Vec<(f64, f64)> {
    g.axes().iter().map(|a| (a[0], a[a.len() - 1])).collect()
}

fn kappa_model() -> Result<(RoughnessModel, bool), CliError> {
    match std::env::var(KAPPA_OVERRIDE_ENV) {
        Ok(v) => {
            let k: f64 = v
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("{KAPPA_OVERRIDE_ENV}={v:?} is not a number")))?;
            Ok((RoughnessModel::with_kappa(k), true))
        }
        Err(_) => Ok((RoughnessModel::standard()?, false)),
    }
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn simulate(ctx: &Context, cmd: SimulateCmd) -> Outcome {
    let prov = ctx.provenance();
    match cmd {
        SimulateCmd::Grf(a) => {
            let field = GrfSampler::new(a.n, a.theta, a.spacing)?.sample(ctx.seed);
            let path = ctx.path("grf_field.csv")?;
            write_field_csv(&path, &field, &prov)?;
            let v = field.values();
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1).max(1) as f64;
            println!("wrote {} ({0}x{0} nodes)", a.n);
            println!("path {}", display(&path));
            println!("mean {mean:.6} variance {var:.6}");
        }
        SimulateCmd::Markov(a) => {
            let field = simulate_markov_field(a.n, a.theta1, a.theta2, a.sweeps, ctx.seed)?;
            let path = ctx.path("markov_field.csv")?;
            write_field_csv(&path, &field, &prov)?;
            let ones = field.values().iter().sum::<f64>();
            println!("wrote {} ({0}x{0} sites, {1} sweeps)", a.n, a.sweeps);
            println!("path {}", display(&path));
            println!("fraction of ones {:.6}", ones / (a.n * a.n) as f64);
        }
        SimulateCmd::Cylinders(a) => {
            let design = TransectDesign {
                count: a.transects,
                length_mm: a.length,
                spacing_mm: a.spacing,
            };
            let sample = if a.plane {
                if !(a.band > 0.0) {
                    return Err(CliError::Usage("--band must be positive".into()));
                }
                let window = Rect::new(0.0, 0.0, a.length, a.band * a.transects as f64)?;
                let process =
                    simulate_cylinder_surface(window, a.alpha, a.beta, stream_seed(ctx.seed, &[label::OUTER]))?;
                sample_transects(&process, a.transects, a.length, a.spacing, ctx.seed)?
            } else {
                simulate_transect_sample(a.alpha, a.beta, &design, ctx.seed)?
            };
            let manifest = write_transect_sample(ctx.out_dir()?, "transects", &sample, &prov)?;
            let m = sample_moments(&sample);
            println!("wrote {} transects of {} heights", a.transects, design.points_per_transect());
            println!("path {}", display(&manifest));
            println!("mean height {:.6} mean squared height {:.6} nu_A {} mm", m.m1, m.m2, m.nu_a);
        }
    }
    Ok(ExitCode::SUCCESS)
}

pub fn fit(ctx: &Context, cmd: FitCmd) -> Outcome {
    let prov = ctx.provenance();
    match cmd {
        FitCmd::Variogram(a) => {
            require_file(&a.input)?;
            let field = read_field_csv(&a.input, a.spacing)?;
            let prior = Prior::uniform(prior_box(&a.prior)?);
            let config = VariogramFitConfig {
                grid_nodes: a.grid_nodes,
                gamma_reps: a.gamma_reps as usize,
                level: a.level,
                seed: ctx.seed,
                ..Default::default()
            };
            let fit = run_variogram_fit(&field, &prior, &config)?;
            let post = ctx.path("variogram_posterior.csv")?;
            write_posterior_csv(&post, &fit.grid, &["theta"], &prov)?;
            let report = VariogramReport {
                schema: "cbpost.fit.variogram.v1",
                provenance: ctx.provenance_json(),
                input: display(&a.input),
                n: field.n(),
                t: fit.t,
                prior_box: box_pairs(prior.support()),
                map: (&fit.map).into(),
                gamma_reps: fit.gamma_reps,
                gamma_mc: fit.gamma_mc,
                info_mc: fit.info_mc,
                posterior_info: (&fit.posterior_info).into(),
                limits: fit
                    .limits
                    .iter()
                    .map(|l| ScalarLimitJson {
                        info_source: l.info_source.to_string(),
                        info: l.info,
                        variance: l.variance,
                        interval: l.interval,
                    })
                    .collect(),
                level: a.level,
                posterior_file: file_name(&post),
                diagnostics: Diagnostics {
                    boundary_warning: fit.map.on_boundary,
                    failed_replications: 0,
                },
            };
            let path = ctx.path("variogram_report.json")?;
            write_json(&path, &report)?;
            println!("MAP theta {:.6}{}", fit.map.point[0], boundary_note(fit.map.on_boundary));
            println!("Gamma (MC) {:.6}  I (MC) {:.6}  I (posterior) {:.6}", fit.gamma_mc, fit.info_mc, fit.info_posterior());
            for l in &fit.limits {
                println!(
                    "limit variance [{}] {:.6}  interval [{:.6}, {:.6}]",
                    l.info_source, l.variance, l.interval.0, l.interval.1
                );
            }
            println!("report {}", display(&path));
        }
        FitCmd::Markov(a) => {
            require_file(&a.input)?;
            let field = read_field_csv(&a.input, 1.0)?;
            let prior = Prior::uniform(prior_box(&a.prior)?);
            let config = MarkovFitConfig {
                grid_nodes: a.grid_nodes,
                reps: a.reps as usize,
                sweeps: a.sweeps,
                level: a.level,
                seed: ctx.seed,
                ..Default::default()
            };
            let fit = run_markov_fit(&field, &prior, &config)?;
            let post = ctx.path("markov_posterior.csv")?;
            write_posterior_csv(&post, &fit.grid, &["theta1", "theta2"], &prov)?;
            let mut marginals = Vec::new();
            for (axis, name) in ["theta1", "theta2"].into_iter().enumerate() {
                let p = ctx.path(&format!("markov_marginal_{name}.csv"))?;
                write_marginal_csv(&p, &fit.grid, axis, name, &prov)?;
                marginals.push(file_name(&p));
            }
            let report = MarkovReport {
                schema: "cbpost.fit.markov.v1",
                provenance: ctx.provenance_json(),
                input: display(&a.input),
                n: field.n(),
                t: fit.t,
                prior_box: box_pairs(prior.support()),
                map: (&fit.map).into(),
                reps: fit.reps,
                sweeps: a.sweeps,
                gamma_mc: rows(&fit.gamma_mc),
                info_mc: rows(&fit.info_mc),
                posterior_info: (&fit.posterior_info).into(),
                limit_mc: (&fit.limit).into(),
                limit_posterior: (&fit.limit_posterior).into(),
                region: (&fit.region).into(),
                posterior_file: file_name(&post),
                marginal_files: marginals,
                diagnostics: Diagnostics {
                    boundary_warning: fit.map.on_boundary,
                    failed_replications: 0,
                },
            };
            let path = ctx.path("markov_report.json")?;
            write_json(&path, &report)?;
            println!(
                "MAP (theta1, theta2) ({:.6}, {:.6}){}",
                fit.map.point[0],
                fit.map.point[1],
                boundary_note(fit.map.on_boundary)
            );
            let c = &fit.limit.covariance;
            println!("limit covariance [[{:.6}, {:.6}], [{:.6}, {:.6}]]", c[(0, 0)], c[(0, 1)], c[(1, 0)], c[(1, 1)]);
            for (name, iv) in ["theta1", "theta2"].iter().zip(&fit.region.intervals) {
                println!("{name} interval [{:.6}, {:.6}]", iv.0, iv.1);
            }
            println!("report {}", display(&path));
        }
        FitCmd::Roughness(a) => {
            require_file(&a.input)?;
            let raw = load_transects(&a.input)?;
            let sample = if a.no_detrend { raw } else { detrend_sample(&raw, a.bandwidth)? };
            let moments = sample_moments(&sample);
            let (model, overridden) = kappa_model()?;
            let prior = Prior::uniform(prior_box(&a.prior)?);
            let config = RoughnessFitConfig {
                grid_nodes: a.grid_nodes,
                refine: !a.no_refine,
                level: a.level,
                ..Default::default()
            };
            let fit = run_roughness_fit(&moments, model, &prior, &config)?;
            let post = ctx.path("roughness_posterior.csv")?;
            write_posterior_csv(&post, &fit.grid, &["alpha", "beta"], &prov)?;
            let mut marginals = Vec::new();
            for (axis, name) in ["alpha", "beta"].into_iter().enumerate() {
                let p = ctx.path(&format!("roughness_marginal_{name}.csv"))?;
                write_marginal_csv(&p, &fit.grid, axis, name, &prov)?;
                marginals.push(file_name(&p));
            }
            let report = RoughnessReport {
                schema: "cbpost.fit.roughness.v1",
                provenance: ctx.provenance_json(),
                input: display(&a.input),
                transects: sample.transects().len(),
                spacing_mm: sample.spacing(),
                detrend_bandwidth_mm: (!a.no_detrend).then_some(a.bandwidth),
                m1: moments.m1,
                m2: moments.m2,
                nu_a_mm: moments.nu_a,
                kappa: fit.kappa,
                kappa_overridden: overridden,
                prior_box: box_pairs(prior.support()),
                grid_box: grid_pairs(&fit.grid),
                map: (&fit.map).into(),
                t: fit.t,
                level: a.level,
                posterior_intervals: fit.posterior_intervals.clone(),
                gaussian_intervals: fit.gaussian_region.intervals.clone(),
                info_moments: rows(&fit.info_moments),
                posterior_info: (&fit.posterior_info).into(),
                limit: (&fit.limit).into(),
                region: (&fit.gaussian_region).into(),
                posterior_file: file_name(&post),
                marginal_files: marginals,
                diagnostics: Diagnostics {
                    boundary_warning: fit.map.on_boundary,
                    failed_replications: 0,
                },
            };
            let path = ctx.path("roughness_report.json")?;
            write_json(&path, &report)?;
            println!("mean height {:.6} mm over {} mm", moments.m1, moments.nu_a);
            println!(
                "MAP (alpha, beta) ({:.6}, {:.6}){}",
                fit.map.point[0],
                fit.map.point[1],
                boundary_note(fit.map.on_boundary)
            );
            for (i, name) in ["alpha", "beta"].iter().enumerate() {
                let (p, g) = (fit.posterior_intervals[i], fit.gaussian_region.intervals[i]);
                println!(
                    "{name} posterior interval [{:.6}, {:.6}]  gaussian [{:.6}, {:.6}]",
                    p.0, p.1, g.0, g.1
                );
            }
            println!("report {}", display(&path));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn boundary_note(on_boundary: bool) -> &'static str {
    if on_boundary {
        "  (warning: on the prior boundary)"
    } else {
        ""
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn coverage_variogram(ctx: &Context, a: &CoverageArgs) -> Outcome {
    let summary = coverage_experiment(a.theta, a.n, a.reps as usize, a.gamma_reps as usize, ctx.seed)?;
    let mut csv = ctx.provenance().preamble();
    csv.push_str("rep,seed,map,mc_lo,mc_hi,mc_covered,posterior_lo,posterior_hi,posterior_covered,error\n");
    for r in &summary.records {
        let (mlo, mhi) = (r.ci_mc.map(|c| c.0), r.ci_mc.map(|c| c.1));
        let (plo, phi) = (r.ci_posterior.map(|c| c.0), r.ci_posterior.map(|c| c.1));
        let flag = |c: Option<bool>| c.map(|b| (b as u8).to_string()).unwrap_or_default();
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{}",
            r.rep,
            r.seed,
            opt(r.map),
            opt(mlo),
            opt(mhi),
            flag(r.covered_mc(a.theta)),
            opt(plo),
            opt(phi),
            flag(r.covered_posterior(a.theta)),
            r.error.as_deref().unwrap_or("").replace([',', '\n'], ";"),
        );
    }
    let records = ctx.path("coverage_variogram.csv")?;
    atomic_write(&records, csv.as_bytes())?;
    let report = CoverageReport {
        schema: "cbpost.coverage.variogram.v1",
        provenance: ctx.provenance_json(),
        theta_true: summary.theta_true,
        n: summary.n,
        outer_reps: summary.outer_reps,
        gamma_reps: summary.gamma_reps,
        failures: summary.failures,
        rate_mc: summary.rate_mc,
        se_mc: summary.se_mc,
        rate_posterior: summary.rate_posterior,
        se_posterior: summary.se_posterior,
        records_file: file_name(&records),
    };
    let path = ctx.path("coverage_variogram_summary.json")?;
    write_json(&path, &report)?;
    println!("coverage (MC information)        {:.4} +- {:.4}", summary.rate_mc, summary.se_mc);
    println!("coverage (posterior information) {:.4} +- {:.4}", summary.rate_posterior, summary.se_posterior);
    println!("failed replications {} of {}", summary.failures, summary.outer_reps);
    println!("summary {}", display(&path));
    Ok(ExitCode::SUCCESS)
}

pub fn validate(ctx: &Context, a: &ValidateArgs) -> Outcome {
    let (model, overridden) = kappa_model()?;
    let config = ValidationConfig {
        seed: ctx.seed,
        ..Default::default()
    };
    let report = run_validation(a.only.as_deref(), &model, &config)?;
    let mut csv = ctx.provenance().preamble();
    csv.push_str("oracle,quantity,measured,expected,tolerance,passed\n");
    for c in &report.checks {
        let _ = writeln!(
            csv,
            "{},{},{:e},{:e},{:e},{}",
            c.oracle, c.quantity, c.measured, c.expected, c.tolerance, c.passed
        );
    }
    atomic_write(&ctx.path("validation.csv")?, csv.as_bytes())?;
    let json = ValidationJson {
        schema: "cbpost.validation.v1",
        provenance: ctx.provenance_json(),
        kappa_used: report.kappa_used,
        kappa_overridden: overridden,
        passed: report.passed(),
        checks: &report.checks,
    };
    write_json(&ctx.path("validation.json")?, &json)?;
    for c in &report.checks {
        println!(
            "{:4}  {:<12} {:<44} measured {:<14.6e} expected {:<14.6e} tol {:.3e}",
            if c.passed { "PASS" } else { "FAIL" },
            c.oracle,
            c.quantity,
            c.measured,
            c.expected,
            c.tolerance
        );
    }
    println!("{} of {} checks passed", report.checks.len() - report.failures(), report.checks.len());
    Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
