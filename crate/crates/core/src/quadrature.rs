//! Gauss–Legendre rules, graded tensor-product quadrature and adaptive
//! subdivision on rectangles.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    (p1, n as f64 * (x * p1 - p0) / (x * x - 1.0))
}

/// Gauss–Legendre rule mapped to `[a, b]`.
#[derive(Debug, Clone)]
pub struct Rule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Rule {
    pub fn new(order: usize) -> Self {
        let (nodes, weights) = gauss_legendre(order);
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
        half * self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(mid + half * x)).sum::<f64>()
    }

    /// Tensor rule on `[x0, x1] x [y0, y1]`.
    pub fn integrate_2d<F: FnMut(f64, f64) -> f64>(&self, x: (f64, f64), y: (f64, f64), mut f: F) -> f64 {
        let (xm, xh) = ((x.0 + x.1) / 2.0, (x.1 - x.0) / 2.0);
        let (ym, yh) = ((y.0 + y.1) / 2.0, (y.1 - y.0) / 2.0);
        let mut total = 0.0;
        for (xi, wi) in self.nodes.iter().zip(&self.weights) {
            let u = xm + xh * xi;
            let mut row = 0.0;
            for (yj, wj) in self.nodes.iter().zip(&self.weights) {
                row += wj * f(u, ym + yh * yj);
            }
            total += wi * row;
        }
        xh * yh * total
    }
}

/// Breakpoints of `[0, 1]` refined geometrically (ratio 1/2) toward both
/// ends, `levels` panels deep on each side.
pub fn graded_breakpoints(levels: usize) -> Vec<f64> {
    let mut pts = vec![0.0];
    for k in (1..=levels).rev() {
        pts.push(0.5f64.powi(k as i32 + 1));
    }
    pts.push(0.5);
    for k in 1..=levels {
        pts.push(1.0 - 0.5f64.powi(k as i32 + 1));
    }
    pts.push(1.0);
    pts
}

/// Composite tensor rule over the product of panel partitions.
pub fn composite_2d<F: Fn(f64, f64) -> f64>(rule: &Rule, xs: &[f64], ys: &[f64], f: F) -> f64 {
    let mut total = 0.0;
    for xp in xs.windows(2) {
        for yp in ys.windows(2) {
            total += rule.integrate_2d((xp[0], xp[1]), (yp[0], yp[1]), &f);
        }
    }
    total
}

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    /// Gauss–Legendre order per axis on each cell.
    pub order: usize,
    pub rel_tol: f64,
    pub max_cells: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self {
            order: 7,
            rel_tol: 1e-10,
            max_cells: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveResult {
    pub value: f64,
    pub error_estimate: f64,
    pub cells: usize,
}

struct Cell {
    x: (f64, f64),
    y: (f64, f64),
    children: [f64; 4],
    error: f64,
    id: usize,
}

impl Cell {
    fn value(&self) -> f64 {
        self.children.iter().sum()
    }
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Cell {}

impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error).then_with(|| other.id.cmp(&self.id))
    }
}

/// Globally adaptive integration over a rectangle: each cell compares its
/// tensor rule with the sum over its four quadrants, and the cell with the
/// largest discrepancy is split until the summed discrepancy falls below
/// `rel_tol * |value|`.
pub fn adaptive_2d<F: Fn(f64, f64) -> f64>(
    f: F,
    x: (f64, f64),
    y: (f64, f64),
    opts: &AdaptiveOptions,
) -> Result<AdaptiveResult> {
    let rule = Rule::new(opts.order);
    let mut next_id = 0;
    let mut make = |x: (f64, f64), y: (f64, f64), whole: f64| {
        let (xm, ym) = ((x.0 + x.1) / 2.0, (y.0 + y.1) / 2.0);
        let quads = [((x.0, xm), (y.0, ym)), ((xm, x.1), (y.0, ym)), ((x.0, xm), (ym, y.1)), ((xm, x.1), (ym, y.1))];
        let children = quads.map(|(qx, qy)| rule.integrate_2d(qx, qy, &f));
        next_id += 1;
        Cell {
            x,
            y,
            children,
            error: (children.iter().sum::<f64>() - whole).abs(),
            id: next_id,
        }
    };
    let whole = rule.integrate_2d(x, y, &f);
    let mut heap = BinaryHeap::new();
    heap.push(make(x, y, whole));
    let mut cells = 1;
    let (mut value, mut error) = (heap.peek().map_or(0.0, Cell::value), heap.peek().map_or(0.0, |c| c.error));
    loop {
        if !value.is_finite() {
            return Err(Error::Evaluation {
                point: vec![x.0, x.1, y.0, y.1],
                value,
            });
        }
        if error <= opts.rel_tol * value.abs() {
            // running sums drift; confirm with an exact pass
            value = heap.iter().map(Cell::value).sum();
            error = heap.iter().map(|c| c.error).sum();
            if error <= opts.rel_tol * value.abs() {
                return Ok(AdaptiveResult {
                    value,
                    error_estimate: error,
                    cells,
                });
            }
        }
        if cells + 3 > opts.max_cells {
            return Err(Error::ResourceLimit(format!(
                "adaptive quadrature used {cells} cells; error estimate {error:e} for value {value:e}"
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let (xm, ym) = ((worst.x.0 + worst.x.1) / 2.0, (worst.y.0 + worst.y.1) / 2.0);
        let quads = [
            ((worst.x.0, xm), (worst.y.0, ym)),
            ((xm, worst.x.1), (worst.y.0, ym)),
            ((worst.x.0, xm), (ym, worst.y.1)),
            ((xm, worst.x.1), (ym, worst.y.1)),
        ];
        value -= worst.value();
        error -= worst.error;
        for (q, whole) in quads.into_iter().zip(worst.children) {
            let cell = make(q.0, q.1, whole);
            value += cell.value();
            error += cell.error;
            heap.push(cell);
        }
        cells += 3;
    }
}
