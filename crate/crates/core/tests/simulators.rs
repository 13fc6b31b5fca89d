use cbpost::autologistic::{conditional_prob, AutologisticParams};
use cbpost::roughness::{RoughnessModel, RoughnessParams};
use cbpost::seeds::stream_seed;
use cbpost::simulate::{sample_transects, simulate_cylinder_surface, simulate_markov_field, GrfSampler, Rect};
use cbpost::variogram::{lag_classes, sample_variogram};

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

#[test]
fn grf_sample_variogram_is_unbiased() {
    let theta = 1.0;
    let sampler = GrfSampler::new(20, theta, 1.0).unwrap();
    let lags = lag_classes(20, 1.0);
    let mut per_lag = vec![Vec::new(); 3];
    for k in 0..300u64 {
        let v = sample_variogram(&sampler.sample(stream_seed(21, &[k])), &lags).unwrap();
        for (l, xs) in per_lag.iter_mut().enumerate() {
            xs.push(v.gamma_hat[l]);
        }
    }
    for (l, xs) in per_lag.iter().enumerate() {
        let (m, sd) = mean_sd(xs);
        let expected = 1.0 - (-theta * lags[l].h).exp();
        let se = sd / (xs.len() as f64).sqrt();
        assert!((m - expected).abs() < 4.0 * se, "lag {}: {m} vs {expected} (se {se})", lags[l].h);
    }
}

#[test]
fn grf_marginal_variance_is_one() {
    let sampler = GrfSampler::new(15, 0.7, 1.0).unwrap();
    let mut xs = Vec::new();
    for k in 0..400u64 {
        xs.push(sampler.sample(stream_seed(22, &[k])).get(7, 7));
    }
    let (m, sd) = mean_sd(&xs);
    assert!(m.abs() < 4.0 / 20.0);
    assert!((sd * sd - 1.0).abs() < 0.2, "variance {}", sd * sd);
}

#[test]
fn gibbs_conditional_frequencies_match_autologistic_conditional() {
    let params = AutologisticParams::new(0.0, 0.3);
    let mut ones = [0u64; 5];
    let mut totals = [0u64; 5];
    for k in 0..6u64 {
        let f = simulate_markov_field(60, 0.0, 0.3, 300, stream_seed(23, &[k])).unwrap();
        for r in 1..59 {
            for c in 1..59 {
                let s = (f.get(r - 1, c) + f.get(r + 1, c) + f.get(r, c - 1) + f.get(r, c + 1)) as usize;
                totals[s] += 1;
                ones[s] += f.get(r, c) as u64;
            }
        }
    }
    for s in 0..5 {
        if totals[s] < 200 {
            continue;
        }
        let p = conditional_prob(1, s as u32, &params);
        let freq = ones[s] as f64 / totals[s] as f64;
        let se = (p * (1.0 - p) / totals[s] as f64).sqrt();
        assert!((freq - p).abs() < 4.0 * se, "s = {s}: {freq} vs {p}");
    }
}

#[test]
fn window_simulator_matches_mean_height_formula() {
    let (alpha, beta) = (20.0, 3.0);
    let model = RoughnessModel::with_kappa(0.0);
    let e = model.expected(&RoughnessParams::new(alpha, beta).unwrap());
    let mut m1 = Vec::new();
    let mut m2 = Vec::new();
    for k in 0..20u64 {
        let window = Rect::new(0.0, 0.0, 1000.0, 200.0).unwrap();
        let process = simulate_cylinder_surface(window, alpha, beta, stream_seed(24, &[k])).unwrap();
        let sample = sample_transects(&process, 10, 1000.0, 1.0, stream_seed(25, &[k])).unwrap();
        for h in sample.transects() {
            let n = h.len() as f64;
            m1.push(h.iter().sum::<f64>() / n);
            m2.push(h.iter().map(|v| v * v).sum::<f64>() / n);
        }
    }
    let (a, sa) = mean_sd(&m1);
    let (b, sb) = mean_sd(&m2);
    let n = (m1.len() as f64).sqrt();
    assert!((a - e[0]).abs() < 4.0 * sa / n, "E1 {a} vs {}", e[0]);
    assert!((b - e[1]).abs() < 4.0 * sb / n, "E2 {b} vs {}", e[1]);
}

#[test]
fn simulators_are_deterministic_per_seed() {
    let g = GrfSampler::new(10, 1.0, 1.0).unwrap();
    assert_eq!(g.sample(5).values(), g.sample(5).values());
    assert_ne!(g.sample(5).values(), g.sample(6).values());
    let a = simulate_markov_field(12, 0.1, 0.2, 50, 9).unwrap();
    let b = simulate_markov_field(12, 0.1, 0.2, 50, 9).unwrap();
    assert_eq!(a.values(), b.values());
}
