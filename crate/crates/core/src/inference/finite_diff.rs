use nalgebra::{DMatrix, DVector};

use super::problem::Contrast;
use crate::error::{Error, Result};

/// Central-difference step: `max(relative * |x_i|, floor)` per coordinate.
#[derive(Debug, Clone, Copy)]
pub struct FdStep {
    pub relative: f64,
    pub floor: f64,
}

impl Default for FdStep {
    fn default() -> Self {
        Self {
            relative: 1e-5,
            floor: 1e-7,
        }
    }
}

impl FdStep {
    fn for_coord(&self, x: f64) -> f64 {
        (self.relative * x.abs()).max(self.floor)
    }
}

fn eval<C: Contrast>(problem: &C, x: &[f64]) -> Result<f64> {
    let v = problem.value(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Evaluation {
            point: x.to_vec(),
            value: v,
        })
    }
}

pub fn finite_difference_gradient<C: Contrast>(problem: &C, at: &[f64], step: FdStep) -> Result<DVector<f64>> {
    let mut g = DVector::zeros(at.len());
    let mut x = at.to_vec();
    for i in 0..at.len() {
        let h = step.for_coord(at[i]);
        x[i] = at[i] + h;
        let fp = eval(problem, &x)?;
        x[i] = at[i] - h;
        let fm = eval(problem, &x)?;
        x[i] = at[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    Ok(g)
}

/// Symmetrized central-difference Hessian from contrast values only.
pub fn finite_difference_hessian<C: Contrast>(problem: &C, at: &[f64], step: FdStep) -> Result<DMatrix<f64>> {
    let p = at.len();
    let h: Vec<f64> = at.iter().map(|x| step.for_coord(*x)).collect();
    let f0 = eval(problem, at)?;
    let mut hess = DMatrix::zeros(p, p);
    let mut x = at.to_vec();
    for i in 0..p {
        x[i] = at[i] + h[i];
        let fp = eval(problem, &x)?;
        x[i] = at[i] - h[i];
        let fm = eval(problem, &x)?;
        x[i] = at[i];
        hess[(i, i)] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
        for j in 0..i {
            let mut corner = |si: f64, sj: f64| -> Result<f64> {
                x[i] = at[i] + si * h[i];
                x[j] = at[j] + sj * h[j];
                let v = eval(problem, &x);
                x[i] = at[i];
                x[j] = at[j];
                v
            };
            let v = (corner(1.0, 1.0)? - corner(1.0, -1.0)? - corner(-1.0, 1.0)? + corner(-1.0, -1.0)?)
                / (4.0 * h[i] * h[j]);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    Ok(hess)
}

/// Analytic gradient when the contrast ships one, central differences otherwise.
pub fn gradient_or_fd<C: Contrast>(problem: &C, at: &[f64]) -> Result<DVector<f64>> {
    match problem.gradient(at) {
        Some(g) => Ok(g),
        None => finite_difference_gradient(problem, at, FdStep::default()),
    }
}

/// Analytic Hessian, else differences of the analytic gradient, else of values.
pub fn hessian_or_fd<C: Contrast>(problem: &C, at: &[f64]) -> Result<DMatrix<f64>> {
    if let Some(h) = problem.hessian(at) {
        return Ok(h);
    }
    if problem.gradient(at).is_none() {
        return finite_difference_hessian(problem, at, FdStep::default());
    }
    let p = at.len();
    let step = FdStep::default();
    let mut hess = DMatrix::zeros(p, p);
    let mut x = at.to_vec();
    for i in 0..p {
        let h = step.for_coord(at[i]);
        x[i] = at[i] + h;
        let gp = problem.gradient(&x).expect("gradient availability is uniform");
        x[i] = at[i] - h;
        let gm = problem.gradient(&x).expect("gradient availability is uniform");
        x[i] = at[i];
        hess.set_column(i, &((gp - gm) / (2.0 * h)));
    }
    Ok((&hess + hess.transpose()) * 0.5)
}
