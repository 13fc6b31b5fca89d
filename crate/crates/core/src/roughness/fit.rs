//! Weighted-least-squares moment contrast and the bivariate posterior fit.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

use super::moments::{RoughnessModel, RoughnessParams};
use super::transects::{sample_moments, MomentPair};
use crate::error::{Error, Result};
use crate::inference::{
    confidence_region, evaluate_cb_posterior, info_from_posterior, limit_distribution, map_estimate, ConfidenceRegion,
    Contrast, GridAxis, LimitDistribution, MapEstimate, MapOptions, ParamBox, PosteriorGrid, PosteriorInfo, Prior,
    Resimulate,
};
use crate::simulate::{simulate_transect_sample, TransectDesign};

/// `U(theta) = r' V(theta)^-1 r / 2` with `r = m_hat - E(theta)`; `t = nu_A`.
#[derive(Debug, Clone, Copy)]
pub struct WlsContrast {
    pub model: RoughnessModel,
    pub moments: MomentPair,
}

struct Pieces {
    r: Vector2<f64>,
    w: Matrix2<f64>,
    wr: Vector2<f64>,
    jac: Matrix2<f64>,
    dv: [Matrix2<f64>; 2],
}

impl WlsContrast {
    pub fn new(model: RoughnessModel, moments: MomentPair) -> Self {
        Self { model, moments }
    }

    fn params(at: &[f64]) -> Option<RoughnessParams> {
        (at[0] > 0.0 && at[1] > 0.0 && at.iter().all(|v| v.is_finite())).then(|| RoughnessParams::from_slice(at))
    }

    fn residual(&self, p: &RoughnessParams) -> Vector2<f64> {
        Vector2::new(self.moments.m1, self.moments.m2) - self.model.expected(p)
    }

    pub fn evaluate(&self, p: &RoughnessParams) -> Result<f64> {
        let r = self.residual(p);
        Ok(0.5 * r.dot(&(self.model.weight(p)? * r)))
    }

    fn pieces(&self, p: &RoughnessParams) -> Option<Pieces> {
        let w = self.model.weight(p).ok()?;
        let r = self.residual(p);
        let v = self.model.variance_polys();
        let dv = [0, 1].map(|i| {
            let (a, b, c) = (v[0].diff(i).eval(p), v[1].diff(i).eval(p), v[2].diff(i).eval(p));
            Matrix2::new(a, b, b, c)
        });
        Some(Pieces {
            wr: w * r,
            r,
            w,
            jac: self.model.jacobian(p),
            dv,
        })
    }

    pub fn gradient_at(&self, p: &RoughnessParams) -> Option<Vector2<f64>> {
        let q = self.pieces(p)?;
        Some(Vector2::from_fn(|i, _| {
            -q.jac.column(i).dot(&q.wr) - 0.5 * q.wr.dot(&(q.dv[i] * q.wr))
        }))
    }

    pub fn hessian_at(&self, p: &RoughnessParams) -> Option<Matrix2<f64>> {
        let q = self.pieces(p)?;
        let e = self.model.mean_polys();
        let v = self.model.variance_polys();
        let mut h = Matrix2::zeros();
        for i in 0..2 {
            for j in i..2 {
                let ji = q.jac.column(i).into_owned();
                let jj = q.jac.column(j).into_owned();
                let eij = Vector2::new(e[0].diff(i).diff(j).eval(p), e[1].diff(i).diff(j).eval(p));
                let (a, b, c) = (
                    v[0].diff(i).diff(j).eval(p),
                    v[1].diff(i).diff(j).eval(p),
                    v[2].diff(i).diff(j).eval(p),
                );
                let vij = Matrix2::new(a, b, b, c);
                let (vi, vj) = (q.dv[i], q.dv[j]);
                let wr = q.wr;
                let value = ji.dot(&(q.w * jj)) - eij.dot(&wr)
                    + ji.dot(&(q.w * vj * wr))
                    + jj.dot(&(q.w * vi * wr))
                    + 0.5 * (wr.dot(&(vj * q.w * vi * wr)) + wr.dot(&(vi * q.w * vj * wr)) - wr.dot(&(vij * wr)));
                h[(i, j)] = value;
                h[(j, i)] = value;
            }
        }
        debug_assert!(q.r.iter().all(|v| v.is_finite()));
        Some(h)
    }
}

impl Contrast for WlsContrast {
    fn dim(&self) -> usize {
        2
    }
    fn t(&self) -> f64 {
        self.moments.nu_a
    }
    fn value(&self, at: &[f64]) -> f64 {
        Self::params(at)
            .and_then(|p| self.evaluate(&p).ok())
            .unwrap_or(f64::INFINITY)
    }
    fn gradient(&self, at: &[f64]) -> Option<DVector<f64>> {
        let g = self.gradient_at(&Self::params(at)?)?;
        Some(DVector::from_column_slice(g.as_slice()))
    }
    fn hessian(&self, at: &[f64]) -> Option<DMatrix<f64>> {
        let h = self.hessian_at(&Self::params(at)?)?;
        Some(DMatrix::from_column_slice(2, 2, h.as_slice()))
    }
}

/// Contrast value with the cached `kappa`; errors when `V` is singular.
pub fn wls_contrast(moments: &MomentPair, p: &RoughnessParams) -> Result<f64> {
    WlsContrast::new(RoughnessModel::standard()?, *moments).evaluate(p)
}

/// Fresh independent transect surveys.
#[derive(Debug, Clone, Copy)]
pub struct RoughnessResimulator {
    pub model: RoughnessModel,
    pub design: TransectDesign,
}

impl Resimulate for RoughnessResimulator {
    type Problem = WlsContrast;

    fn resimulate(&self, at: &[f64], seed: u64) -> Result<WlsContrast> {
        let sample = simulate_transect_sample(at[0], at[1], &self.design, seed)?;
        Ok(WlsContrast::new(self.model, sample_moments(&sample)))
    }
}

/// Default prior: uniform on `[1, 100] x [1, 5]`.
pub fn default_prior() -> Prior {
    Prior::uniform(ParamBox::new(vec![1.0, 1.0], vec![100.0, 5.0]).expect("static box"))
}

#[derive(Debug, Clone)]
pub struct RoughnessFitConfig {
    pub grid_nodes: usize,
    /// Re-tabulate on a box around the MAP after the first pass.
    pub refine: bool,
    /// Half-width of the refined box in approximate posterior SDs.
    pub refine_sds: f64,
    pub level: f64,
    pub map: MapOptions,
}

impl Default for RoughnessFitConfig {
    fn default() -> Self {
        Self {
            grid_nodes: 101,
            refine: true,
            refine_sds: 6.0,
            level: 0.95,
            map: MapOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RoughnessFit {
    pub moments: MomentPair,
    pub kappa: f64,
    pub grid: PosteriorGrid,
    pub map: MapEstimate,
    pub t: f64,
    /// Equal-tailed intervals from the posterior marginals.
    pub posterior_intervals: Vec<(f64, f64)>,
    /// `J' V^-1 J` at the MAP (equal to the gradient variance here).
    pub info_moments: DMatrix<f64>,
    pub posterior_info: PosteriorInfo,
    /// Gaussian limit with covariance `I^-1 / t`.
    pub limit: LimitDistribution,
    pub gaussian_region: ConfidenceRegion,
}

fn refined_box(
    problem: &WlsContrast,
    coarse: &PosteriorGrid,
    map: &MapEstimate,
    support: &ParamBox,
    sds: f64,
) -> Result<ParamBox> {
    let t = problem.t();
    let safety = coarse.marginal_intervals(1.0 - 1e-6);
    let mut lo: Vec<f64> = safety.iter().map(|iv| iv.0).collect();
    let mut hi: Vec<f64> = safety.iter().map(|iv| iv.1).collect();
    let steps: Vec<f64> = coarse.axes().iter().map(|a| a[1] - a[0]).collect();
    let gaussian = problem
        .hessian(&map.point)
        .and_then(|h| h.cholesky())
        .map(|c| c.inverse() / t);
    for i in 0..2 {
        match &gaussian {
            Some(cov) => {
                let sd = cov[(i, i)].sqrt();
                lo[i] = (lo[i] - steps[i]).min(map.point[i] - sds * sd);
                hi[i] = (hi[i] + steps[i]).max(map.point[i] + sds * sd);
            }
            None => {
                lo[i] -= steps[i];
                hi[i] += steps[i];
            }
        }
    }
    let bx = ParamBox::new(lo, hi)?;
    support
        .intersect(&bx)
        .ok_or_else(|| Error::DegeneratePosterior("refined box misses the prior support".into()))
}

pub fn run_roughness_fit(
    moments: &MomentPair,
    model: RoughnessModel,
    prior: &Prior,
    config: &RoughnessFitConfig,
) -> Result<RoughnessFit> {
    let problem = WlsContrast::new(model, *moments);
    let support = prior.support();
    if support.dim() != 2 {
        return Err(Error::invalid("roughness prior must be two-dimensional"));
    }
    let t = problem.t();
    let coarse = evaluate_cb_posterior(&problem, prior, &GridAxis::spanning(support, config.grid_nodes))?;
    let map = map_estimate(&problem, prior, support, &config.map)?;
    let grid = if config.refine {
        let bx = refined_box(&problem, &coarse, &map, support, config.refine_sds)?;
        evaluate_cb_posterior(&problem, prior, &GridAxis::spanning(&bx, config.grid_nodes))?
    } else {
        coarse
    };
    let posterior_intervals = grid.marginal_intervals(config.level);
    let posterior_info = info_from_posterior(&grid, &map, t)?;
    let info = model.information(&RoughnessParams::from_slice(&map.point))?;
    let info_moments = DMatrix::from_column_slice(2, 2, info.as_slice());
    let limit = limit_distribution(&map.point, &info_moments, &info_moments, t)?;
    let gaussian_region = confidence_region(&limit, config.level)?;
    Ok(RoughnessFit {
        moments: *moments,
        kappa: model.kappa(),
        grid,
        map,
        t,
        posterior_intervals,
        info_moments,
        posterior_info,
        limit,
        gaussian_region,
    })
}

#[cfg(test)]
mod tests {
    use super::super::kappa::KAPPA_REFERENCE;
    use super::*;
    use crate::inference::{finite_difference_gradient, finite_difference_hessian, FdStep};

    fn model() -> RoughnessModel {
        RoughnessModel::with_kappa(KAPPA_REFERENCE)
    }

    fn exact_moments(alpha: f64, beta: f64, nu_a: f64) -> MomentPair {
        let e = model().expected(&RoughnessParams::new(alpha, beta).unwrap());
        MomentPair::new(e[0], e[1], nu_a).unwrap()
    }

    #[test]
    fn zero_at_matching_moments_positive_elsewhere() {
        let c = WlsContrast::new(model(), exact_moments(46.6, 3.28, 14160.0));
        assert!(c.value(&[46.6, 3.28]).abs() < 1e-20);
        assert!(c.value(&[40.0, 3.28]) > 0.0);
        assert!(c.value(&[46.6, 3.0]) > 0.0);
        assert_eq!(c.value(&[-1.0, 3.0]), f64::INFINITY);
        assert!(c.gradient(&[0.0, 3.0]).is_none());
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let c = WlsContrast::new(model(), MomentPair::new(7.9, 75.0, 14160.0).unwrap());
        for at in [[46.6, 3.28], [20.0, 3.0], [80.0, 4.2], [5.0, 1.5]] {
            let g = c.gradient(&at).unwrap();
            let fd = finite_difference_gradient(&c, &at, FdStep::default()).unwrap();
            for i in 0..2 {
                assert!((g[i] - fd[i]).abs() <= 1e-5 * g[i].abs().max(1e-8), "{at:?}: {g} vs {fd}");
            }
            let h = c.hessian(&at).unwrap();
            let fdh = finite_difference_hessian(&c, &at, FdStep::default()).unwrap();
            let scale = h.abs().max();
            for k in 0..4 {
                assert!((h[k] - fdh[k]).abs() <= 1e-3 * scale, "{at:?}: {h} vs {fdh}");
            }
        }
    }

    #[test]
    fn hessian_at_truth_is_information() {
        let c = WlsContrast::new(model(), exact_moments(30.0, 3.0, 1e4));
        let p = RoughnessParams::new(30.0, 3.0).unwrap();
        let h = c.hessian_at(&p).unwrap();
        let info = model().information(&p).unwrap();
        for k in 0..4 {
            assert!((h[k] - info[k]).abs() < 1e-10 * info.abs().max());
        }
    }

    #[test]
    fn fit_recovers_exact_moments() {
        let m = exact_moments(46.6, 3.28, 14160.0);
        let fit = run_roughness_fit(&m, model(), &default_prior(), &RoughnessFitConfig::default()).unwrap();
        assert!((fit.map.point[0] - 46.6).abs() < 1e-3, "{:?}", fit.map.point);
        assert!((fit.map.point[1] - 3.28).abs() < 1e-5);
        let (alo, ahi) = fit.posterior_intervals[0];
        let (glo, ghi) = fit.gaussian_region.intervals[0];
        assert!(alo < 46.6 && 46.6 < ahi);
        assert!(((ahi - alo) / (ghi - glo) - 1.0).abs() < 0.3);
        let beta_nodes = fit.grid.axes()[1].iter().filter(|b| (fit.posterior_intervals[1].0..=fit.posterior_intervals[1].1).contains(b)).count();
        assert!(beta_nodes >= 25, "{beta_nodes}");
    }
}
