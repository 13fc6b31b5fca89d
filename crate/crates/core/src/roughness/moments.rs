//! Closed-form first two moments of the cylinder surface, their asymptotic
//! covariance and the resulting information matrix.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use super::kappa::kappa_constant;
use crate::error::{Error, Result};

/// Intensity scale `alpha` and radius decay rate `beta` (mm^-1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoughnessParams {
    pub alpha: f64,
    pub beta: f64,
}

impl RoughnessParams {
    /// `alpha >= 0` (zero is the empty process) and `beta > 0`.
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite() && beta > 0.0 && beta.is_finite()) {
            return Err(Error::invalid(format!("need alpha >= 0 and beta > 0, got ({alpha}, {beta})")));
        }
        Ok(Self { alpha, beta })
    }

    pub(crate) fn from_slice(at: &[f64]) -> Self {
        Self {
            alpha: at[0],
            beta: at[1],
        }
    }
}

/// Sum of terms `c alpha^a beta^b`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Poly(Vec<(f64, i32, i32)>);

impl Poly {
    pub(crate) fn eval(&self, p: &RoughnessParams) -> f64 {
        self.0
            .iter()
            .map(|&(c, a, b)| if c == 0.0 { 0.0 } else { c * p.alpha.powi(a) * p.beta.powi(b) })
            .sum()
    }

    /// Partial derivative in coordinate 0 (alpha) or 1 (beta).
    pub(crate) fn diff(&self, coord: usize) -> Poly {
        Poly(
            self.0
                .iter()
                .map(|&(c, a, b)| if coord == 0 { (c * a as f64, a - 1, b) } else { (c * b as f64, a, b - 1) })
                .filter(|t| t.0 != 0.0)
                .collect(),
        )
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Moment formulas with an explicit value of `kappa`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoughnessModel {
    kappa: f64,
}

impl RoughnessModel {
    pub fn with_kappa(kappa: f64) -> Self {
        Self { kappa }
    }

    /// Uses the cached quadrature value of `kappa`.
    pub fn standard() -> Result<Self> {
        Ok(Self::with_kappa(kappa_constant()?))
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub(crate) fn mean_polys(&self) -> [Poly; 2] {
        [
            Poly(vec![(6.0 * PI, 1, -4)]),
            Poly(vec![(36.0 * PI * PI, 2, -8), (24.0 * PI, 1, -5)]),
        ]
    }

    /// Entries `[V11, V12, V22]`.
    pub(crate) fn variance_polys(&self) -> [Poly; 3] {
        let lens = 16.0 / 3.0;
        [
            Poly(vec![(factorial(5) * lens, 1, -6)]),
            Poly(vec![(factorial(6) * lens, 1, -7), (factorial(5) * 64.0 * PI, 2, -10)]),
            Poly(vec![
                (factorial(7) * lens, 1, -8),
                (factorial(6) * 128.0 * PI + factorial(10) * 32.0 * self.kappa, 2, -11),
                (factorial(3) * factorial(5) * 128.0 * PI * PI, 3, -14),
            ]),
        ]
    }

    pub fn expected(&self, p: &RoughnessParams) -> Vector2<f64> {
        let [e1, e2] = self.mean_polys();
        Vector2::new(e1.eval(p), e2.eval(p))
    }

    /// `J[(k, i)] = d E_k / d theta_i`.
    pub fn jacobian(&self, p: &RoughnessParams) -> Matrix2<f64> {
        let e = self.mean_polys();
        Matrix2::from_fn(|k, i| e[k].diff(i).eval(p))
    }

    pub fn variance(&self, p: &RoughnessParams) -> Matrix2<f64> {
        let [v11, v12, v22] = self.variance_polys();
        let (a, b, c) = (v11.eval(p), v12.eval(p), v22.eval(p));
        Matrix2::new(a, b, b, c)
    }

    /// `V^-1`, failing when `V` is not positive definite.
    pub fn weight(&self, p: &RoughnessParams) -> Result<Matrix2<f64>> {
        let v = self.variance(p);
        v.cholesky()
            .map(|c| c.inverse())
            .ok_or_else(|| Error::Singular(format!("moment covariance is not positive definite at {p:?}")))
    }

    /// `J' V^-1 J`.
    pub fn information(&self, p: &RoughnessParams) -> Result<Matrix2<f64>> {
        let j = self.jacobian(p);
        let info = j.transpose() * self.weight(p)? * j;
        Ok((info + info.transpose()) * 0.5)
    }
}

pub fn expected_moments(p: &RoughnessParams) -> (f64, f64) {
    let e = RoughnessModel::with_kappa(0.0).expected(p);
    (e[0], e[1])
}

pub fn asymptotic_variance_v(p: &RoughnessParams) -> Result<Matrix2<f64>> {
    let v = RoughnessModel::standard()?.variance(p);
    if p.alpha > 0.0 && v.cholesky().is_none() {
        return Err(Error::Singular(format!("moment covariance is not positive definite at {p:?}")));
    }
    Ok(v)
}

pub fn info_matrix_moments(p: &RoughnessParams) -> Result<Matrix2<f64>> {
    RoughnessModel::standard()?.information(p)
}
