use nalgebra::{DMatrix, DVector};

use crate::error::Result;

/// A contrast `alpha -> U_t(alpha)` together with its normalizing size `t`.
///
/// `value` may return `+inf` to exclude a point; any other non-finite value is
/// treated as an evaluation failure. Implementations must be callable from
/// several threads at once.
pub trait Contrast: Sync {
    fn dim(&self) -> usize;

    /// Sample size entering the posterior exponent `exp(-t U_t)`.
    fn t(&self) -> f64;

    fn value(&self, at: &[f64]) -> f64;

    fn gradient(&self, _at: &[f64]) -> Option<DVector<f64>> {
        None
    }

    fn hessian(&self, _at: &[f64]) -> Option<DMatrix<f64>> {
        None
    }
}

/// Builds a fresh contrast from synthetic data simulated at a parameter value.
pub trait Resimulate: Sync {
    type Problem: Contrast + Send;

    fn resimulate(&self, at: &[f64], seed: u64) -> Result<Self::Problem>;
}

impl<C: Contrast + ?Sized> Contrast for &C {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn t(&self) -> f64 {
        (**self).t()
    }
    fn value(&self, at: &[f64]) -> f64 {
        (**self).value(at)
    }
    fn gradient(&self, at: &[f64]) -> Option<DVector<f64>> {
        (**self).gradient(at)
    }
    fn hessian(&self, at: &[f64]) -> Option<DMatrix<f64>> {
        (**self).hessian(at)
    }
}

/// Contrast given by closures, mostly for tests and small experiments.
pub struct FnContrast<F> {
    dim: usize,
    t: f64,
    f: F,
}

impl<F> FnContrast<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    pub fn new(dim: usize, t: f64, f: F) -> Self {
        Self { dim, t, f }
    }
}

impl<F> Contrast for FnContrast<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn t(&self) -> f64 {
        self.t
    }
    fn value(&self, at: &[f64]) -> f64 {
        (self.f)(at)
    }
}

/// Quadratic contrast `U(a) = (a - m)' A (a - m) / 2` with exact derivatives.
#[derive(Debug, Clone)]
pub struct QuadraticContrast {
    pub center: DVector<f64>,
    pub curvature: DMatrix<f64>,
    pub t: f64,
}

impl QuadraticContrast {
    pub fn new(center: Vec<f64>, curvature: DMatrix<f64>, t: f64) -> Self {
        Self {
            center: DVector::from_vec(center),
            curvature,
            t,
        }
    }
}

impl Contrast for QuadraticContrast {
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn t(&self) -> f64 {
        self.t
    }
    fn value(&self, at: &[f64]) -> f64 {
        let d = DVector::from_column_slice(at) - &self.center;
        0.5 * d.dot(&(&self.curvature * &d))
    }
    fn gradient(&self, at: &[f64]) -> Option<DVector<f64>> {
        let d = DVector::from_column_slice(at) - &self.center;
        Some(&self.curvature * d)
    }
    fn hessian(&self, _at: &[f64]) -> Option<DMatrix<f64>> {
        Some(self.curvature.clone())
    }
}
