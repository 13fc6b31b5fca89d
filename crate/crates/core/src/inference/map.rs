use rayon::prelude::*;
use serde::Serialize;

use super::finite_diff::{gradient_or_fd, hessian_or_fd};
use super::param::{ParamBox, ParamPoint};
use super::prior::Prior;
use super::problem::Contrast;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct MapOptions {
    /// Coarse-scan nodes per axis.
    pub grid_nodes: usize,
    /// Termination tolerance on parameter coordinates.
    pub xtol: f64,
    pub max_iter: usize,
}

impl Default for MapOptions {
    fn default() -> Self {
        Self {
            grid_nodes: 51,
            xtol: 1e-6,
            max_iter: 20_000,
        }
    }
}

/// Mode of the CB-posterior.
#[derive(Debug, Clone, Serialize)]
pub struct MapEstimate {
    pub point: ParamPoint,
    /// `U_t - (1/t) log c` at `point`.
    pub objective: f64,
    /// False when local refinement could not improve on the best grid node.
    pub refined: bool,
    /// The mode touches the box boundary (the interior assumption is violated).
    pub on_boundary: bool,
}

struct Objective<'a, C> {
    problem: &'a C,
    prior: &'a Prior,
    bx: &'a ParamBox,
    t: f64,
}

impl<C: Contrast> Objective<'_, C> {
    fn eval(&self, x: &[f64]) -> f64 {
        if !self.bx.contains(x) {
            return f64::INFINITY;
        }
        let u = self.problem.value(x);
        let v = u - self.prior.log_density(x) / self.t;
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }
}

/// Locate the CB-MAP `argmin { U_t(a) - log c(a) / t }` over `bx`: a coarse
/// grid scan followed by golden-section (p = 1) or Nelder-Mead (p >= 2)
/// refinement.
pub fn map_estimate<C: Contrast>(
    problem: &C,
    prior: &Prior,
    bx: &ParamBox,
    opts: &MapOptions,
) -> Result<MapEstimate> {
    let p = bx.dim();
    if problem.dim() != p || prior.support().dim() != p {
        return Err(Error::invalid("box, prior and contrast dimensions differ"));
    }
    if !prior.support().contains_box(bx) {
        return Err(Error::invalid("search box must lie inside the prior support"));
    }
    if opts.grid_nodes < 2 {
        return Err(Error::invalid("coarse grid needs at least 2 nodes per axis"));
    }
    let obj = Objective {
        problem,
        prior,
        bx,
        t: problem.t(),
    };

    let n = opts.grid_nodes;
    let steps: Vec<f64> = (0..p).map(|d| bx.width(d) / (n - 1) as f64).collect();
    let node = |mut flat: usize| -> Vec<f64> {
        let mut x = vec![0.0; p];
        for d in (0..p).rev() {
            let k = flat % n;
            flat /= n;
            x[d] = if k + 1 == n { bx.upper()[d] } else { bx.lower()[d] + k as f64 * steps[d] };
        }
        x
    };
    let values: Vec<f64> = (0..n.pow(p as u32))
        .into_par_iter()
        .map(|flat| obj.eval(&node(flat)))
        .collect();
    let (best_flat, best_val) = values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (k, v)| if *v < acc.1 { (k, *v) } else { acc });
    let start = node(best_flat);
    if !best_val.is_finite() {
        return Err(Error::Evaluation {
            point: start,
            value: best_val,
        });
    }

    let (mut x, mut fx) = if p == 1 {
        let lo = (start[0] - steps[0]).max(bx.lower()[0]);
        let hi = (start[0] + steps[0]).min(bx.upper()[0]);
        let (x, f) = golden_section(|a| obj.eval(&[a]), lo, hi, opts.xtol);
        (vec![x], f)
    } else {
        let scale: Vec<f64> = steps.iter().map(|h| 0.5 * h).collect();
        let first = nelder_mead(|a| obj.eval(a), &start, &scale, opts.xtol, opts.max_iter);
        let small: Vec<f64> = steps.iter().map(|h| 0.01 * h).collect();
        let second = nelder_mead(|a| obj.eval(a), &first.0, &small, opts.xtol, opts.max_iter);
        if second.1 <= first.1 {
            second
        } else {
            first
        }
    };
    let refined = fx <= best_val;
    if !refined {
        x = start;
        fx = best_val;
    }
    bx.clamp(&mut x);
    let on_boundary = (0..p).any(|d| {
        let tol = 1e-4 * bx.width(d);
        x[d] - bx.lower()[d] <= tol || bx.upper()[d] - x[d] <= tol
    });
    Ok(MapEstimate {
        point: ParamPoint::new(x)?,
        objective: fx,
        refined,
        on_boundary,
    })
}

/// Golden-section minimization on `[lo, hi]`; returns the best point seen.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, xtol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut best = (lo, f(lo));
    let fh = f(hi);
    if fh < best.1 {
        best = (hi, fh);
    }
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while hi - lo > xtol {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    for (x, v) in [(c, fc), (d, fd)] {
        if v < best.1 {
            best = (x, v);
        }
    }
    best
}

/// Nelder-Mead simplex search started at `x0` with per-coordinate initial
/// steps `scale`. Stops once every vertex is within `xtol` of the best one.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: F,
    x0: &[f64],
    scale: &[f64],
    xtol: f64,
    max_iter: usize,
) -> (Vec<f64>, f64) {
    let p = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(p + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..p {
        let mut x = x0.to_vec();
        x[i] += scale[i];
        let mut fx = f(&x);
        if !fx.is_finite() {
            x[i] = x0[i] - scale[i];
            fx = f(&x);
        }
        simplex.push((x, fx));
    }

    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[1..].iter().fold(0.0f64, |m, (x, _)| {
            x.iter()
                .zip(&simplex[0].0)
                .fold(m, |m, (a, b)| m.max((a - b).abs()))
        });
        if spread < xtol {
            break;
        }
        let centroid: Vec<f64> = (0..p)
            .map(|i| simplex[..p].iter().map(|(x, _)| x[i]).sum::<f64>() / p as f64)
            .collect();
        let worst = simplex[p].clone();
        let along = |coef: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + coef * (c - w))
                .collect()
        };
        let xr = along(1.0);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = along(2.0);
            let fe = f(&xe);
            simplex[p] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[p - 1].1 {
            simplex[p] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let xc = along(0.5);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = along(-0.5);
                let fc = f(&xc);
                (xc, fc)
            };
            if fc < worst.1.min(fr) {
                simplex[p] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for v in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = v.0.iter().zip(&best).map(|(a, b)| b + 0.5 * (a - b)).collect();
                    let fx = f(&x);
                    *v = (x, fx);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}

/// Damped Newton iteration on the contrast alone (no prior), from `x0`.
/// Uses analytic derivatives when available; steps are halved until the
/// contrast decreases, and a gradient step replaces a non-convex Newton step.
pub fn newton_minimize<C: Contrast>(problem: &C, x0: &[f64], xtol: f64, max_iter: usize) -> Result<(Vec<f64>, f64)> {
    let mut x = x0.to_vec();
    let mut fx = problem.value(&x);
    if !fx.is_finite() {
        return Err(Error::Evaluation { point: x, value: fx });
    }
    for _ in 0..max_iter {
        let g = gradient_or_fd(problem, &x)?;
        let h = hessian_or_fd(problem, &x)?;
        let dir = match h.clone().cholesky() {
            Some(c) => -c.solve(&g),
            None => -&g / h.diagonal().abs().max().max(1e-300),
        };
        let mut step = 1.0;
        let mut moved = false;
        while step > 1e-12 {
            let trial: Vec<f64> = x.iter().zip(dir.iter()).map(|(a, d)| a + step * d).collect();
            let ft = problem.value(&trial);
            if ft <= fx {
                let shift = x.iter().zip(&trial).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                x = trial;
                fx = ft;
                moved = true;
                if shift <= xtol * (1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()))) {
                    return Ok((x, fx));
                }
                break;
            }
            step *= 0.5;
        }
        if !moved {
            return Ok((x, fx));
        }
    }
    Ok((x, fx))
}
