use std::hint::black_box;

use cbpost::autologistic::PseudoLikelihood;
use cbpost::inference::{evaluate_cb_posterior, GridAxis, ParamBox, Prior};
use cbpost::roughness::{kappa_tensor_gauss, MomentPair, RoughnessModel, WlsContrast};
use cbpost::simulate::{simulate_markov_field, simulate_transect_sample, GrfSampler, TransectDesign};
use cbpost::variogram::VariogramContrast;
use criterion::{criterion_group, criterion_main, Criterion};

fn simulators(c: &mut Criterion) {
    let grf = GrfSampler::new(20, 1.0, 1.0).unwrap();
    c.bench_function("grf_sample_20x20", |b| b.iter(|| grf.sample(black_box(7))));
    c.bench_function("gibbs_30x30_100_sweeps", |b| {
        b.iter(|| simulate_markov_field(30, 0.0, 0.3, 100, black_box(7)).unwrap())
    });
    let design = TransectDesign::default();
    c.bench_function("transect_survey_default", |b| {
        b.iter(|| simulate_transect_sample(46.6, 3.28, &design, black_box(7)).unwrap())
    });
}

fn posteriors(c: &mut Criterion) {
    let field = GrfSampler::new(20, 1.0, 1.0).unwrap().sample(3);
    let vario = VariogramContrast::from_field(&field).unwrap();
    let prior = Prior::uniform(ParamBox::new(vec![0.0], vec![4.0]).unwrap());
    let axes = GridAxis::spanning(prior.support(), 401);
    c.bench_function("variogram_posterior_401", |b| {
        b.iter(|| evaluate_cb_posterior(&vario, &prior, &axes).unwrap())
    });

    let binary = simulate_markov_field(30, 0.0, 0.3, 200, 3).unwrap();
    let pl = PseudoLikelihood::from_field(&binary).unwrap();
    let prior2 = Prior::uniform(ParamBox::new(vec![-1.5, -1.5], vec![1.5, 1.5]).unwrap());
    let axes2 = GridAxis::spanning(prior2.support(), 101);
    c.bench_function("markov_posterior_101x101", |b| {
        b.iter(|| evaluate_cb_posterior(&pl, &prior2, &axes2).unwrap())
    });

    let model = RoughnessModel::standard().unwrap();
    let moments = MomentPair::new(7.56, 66.4, 14160.0).unwrap();
    let wls = WlsContrast::new(model, moments);
    let prior3 = Prior::uniform(ParamBox::new(vec![1.0, 1.0], vec![100.0, 5.0]).unwrap());
    let axes3 = GridAxis::spanning(prior3.support(), 101);
    c.bench_function("roughness_posterior_101x101", |b| {
        b.iter(|| evaluate_cb_posterior(&wls, &prior3, &axes3).unwrap())
    });
}

fn quadrature(c: &mut Criterion) {
    let mut g = c.benchmark_group("kappa");
    g.sample_size(10);
    g.bench_function("tensor_gauss", |b| b.iter(kappa_tensor_gauss));
    g.finish();
}

criterion_group!(benches, simulators, posteriors, quadrature);
criterion_main!(benches);
