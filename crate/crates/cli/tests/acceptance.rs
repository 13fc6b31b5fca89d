//! Acceptance criteria, one PASS/FAIL line each. Runs as a plain binary so
//! every criterion reports even when an earlier one fails.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use cbpost::autologistic::{self, run_markov_fit, MarkovFitConfig, PseudoLikelihood};
use cbpost::inference::{
    evaluate_cb_posterior, info_from_posterior, map_estimate, newton_minimize, Contrast, FnContrast, GridAxis,
    MapOptions, ParamBox, Prior, QuadraticContrast,
};
use cbpost::nalgebra::DMatrix;
use cbpost::roughness::{self, sample_moments, RoughnessModel, WlsContrast};
use cbpost::seeds::stream_seed;
use cbpost::simulate::{simulate_markov_field, simulate_transect_sample, GrfSampler, TransectDesign};
use cbpost::validation::{
    derivative_oracle, gamma_info_oracle, kappa_oracle, moment_oracle, variance_oracle, OracleCheck, ValidationConfig,
};
use cbpost::variogram::{self, coverage_experiment, run_variogram_fit, VariogramContrast, VariogramFitConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn oracle_outcome(checks: &[OracleCheck]) -> Outcome {
    let failed: Vec<String> = checks.iter().filter(|c| !c.passed).map(|c| c.quantity.clone()).collect();
    let worst = checks
        .iter()
        .map(|c| (c.measured - c.expected).abs() / c.tolerance)
        .fold(0.0f64, f64::max);
    if failed.is_empty() {
        outcome(true, format!("{} checks, worst gap {worst:.2} x tolerance", checks.len()))
    } else {
        outcome(false, format!("failed: {}", failed.join("; ")))
    }
}

fn c1_flat_prior_equivalence() -> Outcome {
    let opts = MapOptions::default();
    let mut gaps = Vec::new();

    let field = GrfSampler::new(20, 1.0, 1.0).unwrap().sample(stream_seed(101, &[0]));
    let vc = VariogramContrast::from_field(&field).unwrap();
    gaps.push(("variogram", gap(&vc, &variogram::default_prior(), &opts, &[1.0])));

    let binary = simulate_markov_field(20, 0.0, 0.3, 500, stream_seed(101, &[1])).unwrap();
    let pl = PseudoLikelihood::from_field(&binary).unwrap();
    gaps.push(("markov", gap(&pl, &autologistic::default_prior(), &opts, &[0.0, 0.3])));

    let sample = simulate_transect_sample(46.6, 3.28, &TransectDesign::default(), stream_seed(101, &[2])).unwrap();
    let wls = WlsContrast::new(RoughnessModel::standard().unwrap(), sample_moments(&sample));
    gaps.push(("roughness", gap(&wls, &roughness::default_prior(), &opts, &[46.6, 3.28])));

    let pass = gaps.iter().all(|(_, g)| *g < 1e-5);
    let detail = gaps.iter().map(|(n, g)| format!("{n} {g:.1e}")).collect::<Vec<_>>().join(", ");
    outcome(pass, format!("max |MAP - minimizer|: {detail} (< 1e-5)"))
}

fn gap<C: Contrast>(c: &C, prior: &Prior, opts: &MapOptions, start: &[f64]) -> f64 {
    let map = map_estimate(c, prior, prior.support(), opts).unwrap();
    let (direct, _) = newton_minimize(c, start, 1e-12, 200).unwrap();
    map.point.iter().zip(&direct).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

fn c2_conjugate_shrinkage() -> Outcome {
    let (m, sigma2) = (2.0f64, 100.0f64);
    let bx = ParamBox::new(vec![-10.0], vec![10.0]).unwrap();
    let prior = Prior::gaussian(bx.clone(), vec![0.0], vec![sigma2.sqrt()]).unwrap();
    let opts = MapOptions {
        xtol: 1e-11,
        ..Default::default()
    };
    let mut worst_map = 0.0f64;
    let mut worst_scaling = 0.0f64;
    for t in [10.0, 100.0, 1000.0] {
        let c = QuadraticContrast::new(vec![m], DMatrix::from_element(1, 1, 1.0), t);
        let map = map_estimate(&c, &prior, &bx, &opts).unwrap().point[0];
        let exact = m * t * sigma2 / (1.0 + t * sigma2);
        worst_map = worst_map.max((map - exact).abs());
        let scaled = (m - map) * t / (m / sigma2);
        worst_scaling = worst_scaling.max((scaled - 1.0).abs());
    }
    outcome(
        worst_map < 1e-8 && worst_scaling < 0.01,
        format!("max |MAP - closed form| {worst_map:.1e} (< 1e-8), max |t * gap / limit - 1| {worst_scaling:.2e} (< 0.01)"),
    )
}

fn c3_gaussianization() -> Outcome {
    let mut devs = Vec::new();
    for n in [100usize, 400, 1600] {
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(103, &[n as u64]));
        let xs: Vec<f64> = (0..n).map(|_| 1.0 + rng.sample::<f64, _>(StandardNormal)).collect();
        let c = FnContrast::new(1, n as f64, move |a: &[f64]| {
            0.5 * xs.iter().map(|x| (x - a[0]).powi(2)).sum::<f64>() / xs.len() as f64
        });
        let bx = ParamBox::new(vec![-5.0], vec![5.0]).unwrap();
        let prior = Prior::cauchy(bx.clone(), vec![0.0], vec![1.0]).unwrap();
        let opts = MapOptions {
            xtol: 1e-10,
            ..Default::default()
        };
        let map = map_estimate(&c, &prior, &bx, &opts).unwrap();
        let t = n as f64;
        let mode = map.point[0];
        let sd = 1.0 / t.sqrt();
        let axis = GridAxis::new(mode - 8.0 * sd, mode + 8.0 * sd, 2001);
        let grid = evaluate_cb_posterior(&c, &prior, &[axis]).unwrap();
        let dev = grid
            .axes()[0]
            .iter()
            .zip(grid.log_unnorm())
            .map(|(a, l)| {
                let post = (l + t * map.objective).exp();
                let gauss = (-0.5 * ((a - mode) / sd).powi(2)).exp();
                (post - gauss).abs()
            })
            .fold(0.0, f64::max);
        devs.push(dev);
    }
    let monotone = devs.windows(2).all(|w| w[1] < w[0]);
    outcome(
        monotone && devs[2] < 0.02,
        format!("max deviation n=100/400/1600: {:.2e} / {:.2e} / {:.2e} (decreasing, last < 0.02)", devs[0], devs[1], devs[2]),
    )
}

fn c4_variogram_coverage() -> Outcome {
    let s = coverage_experiment(1.0, 20, 200, 200, 1).unwrap();
    let ok = |r: f64| (0.90..=0.99).contains(&r);
    outcome(
        ok(s.rate_mc) && ok(s.rate_posterior),
        format!(
            "200 x 200 at seed 1: MC-information {:.3} +- {:.3}, posterior-information {:.3} +- {:.3} (both in [0.90, 0.99]); {} failed fits",
            s.rate_mc, s.se_mc, s.rate_posterior, s.se_posterior, s.failures
        ),
    )
}

struct VariogramRun {
    gamma: f64,
    info_mc: f64,
    info_post: f64,
    limit_var: f64,
}

fn variogram_realizations() -> Vec<VariogramRun> {
    let sampler = GrfSampler::new(20, 1.0, 1.0).unwrap();
    (0..50u64)
        .into_par_iter()
        .map(|k| {
            let field = sampler.sample(stream_seed(105, &[k]));
            let config = VariogramFitConfig {
                gamma_reps: 1000,
                seed: stream_seed(106, &[k]),
                ..Default::default()
            };
            let fit = run_variogram_fit(&field, &variogram::default_prior(), &config).unwrap();
            VariogramRun {
                gamma: fit.gamma_mc,
                info_mc: fit.info_mc,
                info_post: fit.info_posterior(),
                limit_var: fit.limits[0].variance,
            }
        })
        .collect()
}

fn c5_variogram_magnitudes(runs: &[VariogramRun]) -> Outcome {
    let g = median(runs.iter().map(|r| r.gamma).collect());
    let i = median(runs.iter().map(|r| r.info_mc).collect());
    let v = median(runs.iter().map(|r| r.limit_var).collect());
    let (pg, pi, pv) = ((1.0..=4.0).contains(&g), (0.15..=0.45).contains(&i), (0.03..=0.25).contains(&v));
    let mark = |b: bool| if b { "ok" } else { "out" };
    outcome(
        pg && pi && pv,
        format!(
            "medians over 50 fields: Gamma {g:.3} [1, 4] {}, MC I {i:.3} [0.15, 0.45] {}, limit variance {v:.3} [0.03, 0.25] {}",
            mark(pg),
            mark(pi),
            mark(pv)
        ),
    )
}

fn c6_markov_sanity() -> Outcome {
    let truth = [0.0, 0.3];
    let prior = autologistic::default_prior();
    let results: Vec<(bool, f64, f64)> = (0..50u64)
        .into_par_iter()
        .map(|k| {
            let field = simulate_markov_field(20, truth[0], truth[1], 500, stream_seed(107, &[k])).unwrap();
            let config = MarkovFitConfig {
                reps: 200,
                seed: stream_seed(108, &[k]),
                ..Default::default()
            };
            let fit = run_markov_fit(&field, &prior, &config).unwrap();
            let c = &fit.limit.covariance;
            (fit.region.ellipsoid_contains(&truth).unwrap_or(false), c[(0, 0)], c[(1, 1)])
        })
        .collect();
    let inside = results.iter().filter(|r| r.0).count();
    let v1 = median(results.iter().map(|r| r.1).collect());
    let v2 = median(results.iter().map(|r| r.2).collect());
    let within = |v: f64, target: f64| v / target <= 2.0 && target / v <= 2.0;
    outcome(
        inside >= 42 && within(v1, 0.14) && within(v2, 0.022),
        format!("{inside}/50 inside the 95% ellipse (>= 42); median variances {v1:.3} (0.14) and {v2:.4} (0.022), factor-2 band"),
    )
}

fn c7_moment_oracle(model: &RoughnessModel, config: &ValidationConfig) -> Outcome {
    let mut checks = moment_oracle(config).unwrap();
    checks.extend(variance_oracle(model, config).unwrap());
    let mut o = oracle_outcome(&checks);
    o.detail = format!(
        "{:.1e} mm per point, {} variance replications: {}",
        config.moment_length_mm, config.variance_reps, o.detail
    );
    o
}

fn c8_gamma_equals_info(model: &RoughnessModel, config: &ValidationConfig) -> Outcome {
    let checks = gamma_info_oracle(model, config).unwrap();
    let worst = checks
        .iter()
        .map(|c| (c.measured / c.expected - 1.0).abs())
        .fold(0.0f64, f64::max);
    let mut o = oracle_outcome(&checks);
    o.detail = format!("worst relative gap {worst:.3} (<= 0.15), {}", o.detail);
    o
}

fn c9_kappa() -> Outcome {
    let checks = kappa_oracle().unwrap();
    let again = kappa_oracle().unwrap();
    let stable = checks.iter().zip(&again).all(|(a, b)| a.measured.to_bits() == b.measured.to_bits());
    let o = oracle_outcome(&checks);
    outcome(
        o.pass && stable,
        format!("scheme gap {:.1e} (< 1e-4), bit-stable across runs: {stable}", checks[0].measured),
    )
}

fn c10_derivatives(model: &RoughnessModel, config: &ValidationConfig) -> Outcome {
    let checks = derivative_oracle(model, config).unwrap();
    let detail = checks
        .iter()
        .map(|c| format!("{} {:.1e}", c.quantity, c.measured))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(checks.iter().all(|c| c.passed), detail)
}

fn c11_posterior_information(runs: &[VariogramRun]) -> Outcome {
    let mut worst = 0.0f64;

    let c1 = QuadraticContrast::new(vec![1.0], DMatrix::from_element(1, 1, 0.7), 200.0);
    let bx1 = ParamBox::new(vec![0.0], vec![2.0]).unwrap();
    let prior1 = Prior::uniform(bx1.clone());
    let grid1 = evaluate_cb_posterior(&c1, &prior1, &GridAxis::spanning(&bx1, 801)).unwrap();
    let map1 = map_estimate(&c1, &prior1, &bx1, &MapOptions::default()).unwrap();
    let info1 = info_from_posterior(&grid1, &map1, c1.t).unwrap();
    worst = worst.max((info1.info[(0, 0)] / 0.7 - 1.0).abs());
    worst = worst.max((info1.shortcut.unwrap() / 0.7 - 1.0).abs());

    let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.6, 0.6, 1.0]);
    let c2 = QuadraticContrast::new(vec![0.0, 0.0], a.clone(), 100.0);
    let bx2 = ParamBox::new(vec![-1.0, -1.5], vec![1.0, 1.5]).unwrap();
    let prior2 = Prior::uniform(bx2.clone());
    let grid2 = evaluate_cb_posterior(&c2, &prior2, &GridAxis::spanning(&bx2, 201)).unwrap();
    let map2 = map_estimate(&c2, &prior2, &bx2, &MapOptions::default()).unwrap();
    let info2 = info_from_posterior(&grid2, &map2, c2.t).unwrap();
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    worst = worst.max((&info2.info - &a).abs().max() / scale);

    let ratio = median(runs.iter().map(|r| (r.info_post / r.info_mc - 1.0).abs()).collect());
    outcome(
        worst < 0.02 && ratio < 0.5,
        format!("Gaussian posteriors: worst relative error {worst:.1e} (< 0.02); variogram median |I_post / I_mc - 1| {ratio:.3} (< 0.5)"),
    )
}

fn run_cli(dir: &Path, threads: &str, args: &[&str]) {
    let status = Command::new(env!("CARGO_BIN_EXE_cbpost"))
        .env_remove("CBPOST_KAPPA_OVERRIDE")
        .current_dir(dir)
        .args(["--seed", "12", "--threads", threads])
        .args(args)
        .stdout(std::process::Stdio::null())
        .status()
        .unwrap();
    assert!(status.success(), "cbpost {args:?} failed");
}

fn c12_determinism() -> Outcome {
    let commands: &[&[&str]] = &[
        &["simulate", "grf", "--n", "20"],
        &["fit", "variogram", "--input", "grf_field.csv", "--gamma-reps", "200"],
        &["simulate", "markov", "--n", "20", "--theta1", "0", "--theta2", "0.3"],
        &["fit", "markov", "--input", "markov_field.csv", "--reps", "100"],
        &["simulate", "cylinders"],
        &["simulate", "cylinders", "--plane", "--transects", "4", "--length", "300"],
        &["fit", "roughness", "--input", "transects.manifest"],
        &["coverage", "variogram", "--reps", "50", "--gamma-reps", "50"],
        &["validate", "--only", "derivatives"],
    ];
    let root = tempfile::tempdir().unwrap();
    let runs = [("1", "a"), ("1", "b"), ("8", "c"), ("8", "d")];
    for (threads, name) in runs {
        let dir = root.path().join(name);
        std::fs::create_dir(&dir).unwrap();
        for args in commands {
            run_cli(&dir, threads, args);
        }
    }
    let listing = |d: &Path| {
        let mut names: Vec<String> = std::fs::read_dir(d)
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .collect();
        names.sort();
        names
    };
    let reference = root.path().join("a");
    let files = listing(&reference);
    let mut mismatches = Vec::new();
    for (_, name) in &runs[1..] {
        let dir = root.path().join(name);
        if listing(&dir) != files {
            mismatches.push(format!("{name}: file set differs"));
            continue;
        }
        for f in &files {
            if std::fs::read(reference.join(f)).unwrap() != std::fs::read(dir.join(f)).unwrap() {
                mismatches.push(format!("{name}/{f}"));
            }
        }
    }
    outcome(
        mismatches.is_empty(),
        if mismatches.is_empty() {
            format!("{} files byte-identical across 2 runs each at 1 and 8 threads", files.len())
        } else {
            format!("differing: {}", mismatches.join(", "))
        },
    )
}

fn main() -> ExitCode {
    let model = RoughnessModel::standard().unwrap();
    let config = ValidationConfig::default();
    let mut variogram_runs = None;
    let mut results = Vec::new();
    let mut record = |id: usize, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        let secs = start.elapsed().as_secs_f64();
        println!(
            "criterion {id:>2} {} {name} [{secs:.1} s]: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        results.push(o.pass);
    };
    record(1, "flat-prior MAP equals minimizer", &mut c1_flat_prior_equivalence);
    record(2, "conjugate MAP shrinkage", &mut c2_conjugate_shrinkage);
    record(3, "posterior gaussianization", &mut c3_gaussianization);
    record(4, "variogram coverage", &mut c4_variogram_coverage);
    record(5, "variogram magnitudes", &mut || {
        let runs = variogram_realizations();
        let o = c5_variogram_magnitudes(&runs);
        variogram_runs = Some(runs);
        o
    });
    record(6, "markov fit sanity", &mut c6_markov_sanity);
    record(7, "moment and variance oracle", &mut || c7_moment_oracle(&model, &config));
    record(8, "gamma equals information", &mut || c8_gamma_equals_info(&model, &config));
    record(9, "kappa cross-scheme", &mut c9_kappa);
    record(10, "derivative suite", &mut || c10_derivatives(&model, &config));
    record(11, "posterior information", &mut || {
        c11_posterior_information(variogram_runs.as_deref().expect("criterion 5 ran"))
    });
    record(12, "determinism", &mut c12_determinism);
    let passed = results.iter().filter(|p| **p).count();
    println!("acceptance: {passed} of {} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
