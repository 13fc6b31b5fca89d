use cbpost::autologistic::{conditional_prob, AutologisticParams};
use cbpost::inference::{
    evaluate_cb_posterior, limit_distribution, map_estimate, Contrast, GridAxis, MapOptions, ParamBox, ParamPoint,
    Prior, QuadraticContrast,
};
use cbpost::nalgebra::DMatrix;
use cbpost::roughness::{sample_moments, RoughnessModel, RoughnessParams};
use cbpost::simulate::{LatticeField, SurfaceSample};
use cbpost::variogram::{lag_classes, sample_variogram};
use proptest::prelude::*;

fn quadratic(center: f64, curv: f64, t: f64) -> QuadraticContrast {
    QuadraticContrast::new(vec![center], DMatrix::from_element(1, 1, curv), t)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn param_box_requires_strict_ordering(lo in -10.0..10.0f64, w in 0.0..5.0f64) {
        prop_assert!(ParamBox::new(vec![lo], vec![lo + w + 1e-6]).is_ok());
        prop_assert!(ParamBox::new(vec![lo + w], vec![lo]).is_err());
    }

    #[test]
    fn posterior_is_normalized_and_nonnegative(
        center in 0.5..3.5f64,
        curv in 0.2..5.0f64,
        t in 1.0..500.0f64,
        nodes in 201usize..402,
    ) {
        let prior = Prior::uniform(ParamBox::new(vec![0.0], vec![4.0]).unwrap());
        let c = quadratic(center, curv, t);
        let grid = evaluate_cb_posterior(&c, &prior, &GridAxis::spanning(prior.support(), nodes)).unwrap();
        prop_assert!(grid.densities().iter().all(|d| *d >= 0.0));
        prop_assert!((grid.total_mass() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn map_objective_is_below_every_grid_node(
        c1 in -1.0..1.0f64,
        c2 in -1.0..1.0f64,
        rho in -0.8..0.8f64,
        t in 1.0..100.0f64,
    ) {
        let curvature = DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]);
        let c = QuadraticContrast::new(vec![c1, c2], curvature, t);
        let bx = ParamBox::new(vec![-1.5, -1.5], vec![1.5, 1.5]).unwrap();
        let prior = Prior::gaussian(bx.clone(), vec![0.0, 0.0], vec![2.0, 2.0]).unwrap();
        let opts = MapOptions::default();
        let map = map_estimate(&c, &prior, &bx, &opts).unwrap();
        for axis0 in GridAxis::spanning(&bx, 21)[0].coords() {
            for axis1 in GridAxis::spanning(&bx, 21)[1].coords() {
                let x = [axis0, axis1];
                let obj = c.value(&x) - prior.log_density(&x) / t;
                prop_assert!(map.objective <= obj + 1e-12);
            }
        }
    }

    #[test]
    fn sample_moments_satisfy_jensen(
        heights in proptest::collection::vec(proptest::collection::vec(-50.0..50.0f64, 10..40), 1..5),
        spacing in 0.1..5.0f64,
    ) {
        let sample = SurfaceSample::new(heights, spacing).unwrap();
        let m = sample_moments(&sample);
        prop_assert!(m.m2 >= m.m1 * m.m1);
        prop_assert!(m.nu_a > 0.0);
    }

    #[test]
    fn sample_variogram_invariants(values in proptest::collection::vec(-3.0..3.0f64, 36)) {
        let field = LatticeField::new(6, values, 1.0).unwrap();
        let lags = lag_classes(6, 1.0);
        let v = sample_variogram(&field, &lags).unwrap();
        prop_assert!(v.gamma_hat.iter().all(|g| *g >= 0.0));
        prop_assert!(v.counts.iter().all(|n| *n >= 1));
        prop_assert!(v.lags.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn sandwich_covariance_is_psd(
        a in 0.1..5.0f64, b in 0.1..5.0f64, r in -0.9..0.9f64,
        g1 in 0.1..5.0f64, g2 in 0.1..5.0f64, s in -0.9..0.9f64,
        t in 1.0..1000.0f64,
    ) {
        let off = r * (a * b).sqrt();
        let info = DMatrix::from_row_slice(2, 2, &[a, off, off, b]);
        let goff = s * (g1 * g2).sqrt();
        let gamma = DMatrix::from_row_slice(2, 2, &[g1, goff, goff, g2]);
        let dist = limit_distribution(&ParamPoint::new(vec![0.0, 0.0]).unwrap(), &info, &gamma, t).unwrap();
        let eig = dist.covariance.clone().symmetric_eigen().eigenvalues;
        prop_assert!(eig.iter().all(|e| *e >= -1e-12 * dist.covariance.trace()));
        prop_assert_eq!(dist.covariance[(0, 1)], dist.covariance[(1, 0)]);
    }

    #[test]
    fn autologistic_conditionals_sum_to_one(t1 in -1.5..1.5f64, t2 in -1.5..1.5f64, s in 0u32..5) {
        let p = AutologisticParams::new(t1, t2);
        let total = conditional_prob(0, s, &p) + conditional_prob(1, s, &p);
        prop_assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn roughness_variance_and_information_are_positive_definite(alpha in 1.0..100.0f64, beta in 1.0..5.0f64) {
        let model = RoughnessModel::standard().unwrap();
        let p = RoughnessParams::new(alpha, beta).unwrap();
        let v = model.variance(&p);
        prop_assert!(v[(0, 0)] > 0.0 && v.determinant() > 0.0);
        let i = model.information(&p).unwrap();
        prop_assert!(i[(0, 0)] > 0.0 && i.determinant() > 0.0);
    }
}
