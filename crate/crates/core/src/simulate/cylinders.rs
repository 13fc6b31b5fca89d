use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds::{label, rng_from_seed, stream_seed, StreamRng};

/// Refuse simulations expected to produce more cylinders than this.
pub const MAX_EXPECTED_CYLINDERS: f64 = 1e7;

/// Upper-tail mass of the radius distribution, weighted by `r^7`, left out by
/// the simulation buffer.
const BUFFER_TAIL_MASS: f64 = 1e-6;

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]` in mm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        if !(x0 < x1 && y0 < y1) || ![x0, y0, x1, y1].iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("rectangle needs x0 < x1 and y0 < y1"));
        }
        Ok(Self { x0, y0, x1, y1 })
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn expanded(&self, by: f64) -> Rect {
        Rect {
            x0: self.x0 - by,
            y0: self.y0 - by,
            x1: self.x1 + by,
            y1: self.y1 + by,
        }
    }
}

/// Radius beyond which the `r^7`-weighted radius law keeps less than
/// `BUFFER_TAIL_MASS`: the Gamma(8, beta) upper quantile.
///
/// The highest moment formula (the `r^7` term of the variance of the mean
/// squared height) is the most sensitive to cylinders centred outside the
/// window, so the buffer is sized for it.
pub fn radius_buffer(beta: f64) -> f64 {
    // Survival of Gamma(8, 1) at q: e^{-q} sum_{k<8} q^k / k!
    let survival = |q: f64| {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..8 {
            term *= q / k as f64;
            sum += term;
        }
        (-q).exp() * sum
    };
    let (mut lo, mut hi) = (0.0, 100.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if survival(mid) > BUFFER_TAIL_MASS {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi / beta
}

fn check_intensity(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha >= 0.0 && alpha.is_finite() && beta > 0.0 && beta.is_finite()) {
        return Err(Error::invalid(format!(
            "cylinder intensity needs alpha >= 0 and beta > 0, got ({alpha}, {beta})"
        )));
    }
    Ok(())
}

fn poisson_count(mean: f64, rng: &mut StreamRng) -> Result<usize> {
    if mean > MAX_EXPECTED_CYLINDERS {
        return Err(Error::ResourceLimit(format!(
            "{mean:.3e} expected cylinders exceeds {MAX_EXPECTED_CYLINDERS:e}"
        )));
    }
    if mean <= 0.0 {
        return Ok(0);
    }
    let draw: f64 = Poisson::new(mean).expect("positive finite mean").sample(rng);
    Ok(draw as usize)
}

/// Realization of the marked Poisson process with intensity
/// `alpha exp(-beta r)` over a window enlarged by `buffer`.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderProcess {
    pub centers: Vec<[f64; 2]>,
    pub radii: Vec<f64>,
    pub window: Rect,
    pub buffer: f64,
}

impl CylinderProcess {
    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn max_radius(&self) -> f64 {
        self.radii.iter().copied().fold(0.0, f64::max)
    }
}

pub fn simulate_cylinder_surface(window: Rect, alpha: f64, beta: f64, seed: u64) -> Result<CylinderProcess> {
    check_intensity(alpha, beta)?;
    let buffer = radius_buffer(beta);
    let outer = window.expanded(buffer);
    let mut rng = rng_from_seed(seed);
    let count = poisson_count(alpha / beta * outer.area(), &mut rng)?;
    let radius = Exp::new(beta).expect("positive rate");
    let mut centers = Vec::with_capacity(count);
    let mut radii = Vec::with_capacity(count);
    for _ in 0..count {
        let x = outer.x0 + rng.random::<f64>() * outer.width();
        let y = outer.y0 + rng.random::<f64>() * outer.height();
        centers.push([x, y]);
        radii.push(radius.sample(&mut rng));
    }
    Ok(CylinderProcess {
        centers,
        radii,
        window,
        buffer,
    })
}

/// Surface height `Y_M = sum r 1{|x - M| < r}` at each point.
pub fn evaluate_surface(process: &CylinderProcess, points: &[[f64; 2]]) -> Vec<f64> {
    if process.is_empty() {
        return vec![0.0; points.len()];
    }
    // Bucket centres on a uniform grid; a query scans the cells that can hold
    // a covering centre.
    let outer = process.window.expanded(process.buffer);
    let cell = (process.buffer / 4.0).max(1e-3);
    let nx = ((outer.width() / cell).ceil() as usize).max(1);
    let ny = ((outer.height() / cell).ceil() as usize).max(1);
    let cell_of = |v: f64, lo: f64, n: usize| (((v - lo) / cell).floor().max(0.0) as usize).min(n - 1);
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); nx * ny];
    for (k, c) in process.centers.iter().enumerate() {
        buckets[cell_of(c[1], outer.y0, ny) * nx + cell_of(c[0], outer.x0, nx)].push(k);
    }
    let reach = (process.max_radius() / cell).ceil() as usize + 1;
    points
        .iter()
        .map(|m| {
            let cx = cell_of(m[0], outer.x0, nx);
            let cy = cell_of(m[1], outer.y0, ny);
            let mut y = 0.0;
            for j in cy.saturating_sub(reach)..=(cy + reach).min(ny - 1) {
                for i in cx.saturating_sub(reach)..=(cx + reach).min(nx - 1) {
                    for &k in &buckets[j * nx + i] {
                        let (c, r) = (process.centers[k], process.radii[k]);
                        if (c[0] - m[0]).powi(2) + (c[1] - m[1]).powi(2) < r * r {
                            y += r;
                        }
                    }
                }
            }
            y
        })
        .collect()
}

/// Heights of transects sampled every `spacing` mm along `length` mm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSample {
    transects: Vec<Vec<f64>>,
    spacing: f64,
    nu_a: f64,
}

impl SurfaceSample {
    /// `nu_A` is the total sampled length `sum (len - 1) * spacing`.
    pub fn new(transects: Vec<Vec<f64>>, spacing: f64) -> Result<Self> {
        if transects.is_empty() {
            return Err(Error::invalid("a surface sample needs at least one transect"));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::invalid("transect spacing must be positive"));
        }
        if transects.iter().any(|t| t.len() < 2) {
            return Err(Error::invalid("every transect needs at least two heights"));
        }
        if transects.iter().flatten().any(|h| !h.is_finite()) {
            return Err(Error::invalid("transect heights must be finite"));
        }
        let nu_a = transects.iter().map(|t| (t.len() - 1) as f64 * spacing).sum();
        Ok(Self {
            transects,
            spacing,
            nu_a,
        })
    }

    pub fn transects(&self) -> &[Vec<f64>] {
        &self.transects
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn nu_a(&self) -> f64 {
        self.nu_a
    }
}

/// Layout of a transect survey.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransectDesign {
    pub count: usize,
    pub length_mm: f64,
    pub spacing_mm: f64,
}

impl Default for TransectDesign {
    fn default() -> Self {
        Self {
            count: 12,
            length_mm: 1180.0,
            spacing_mm: 2.0,
        }
    }
}

impl TransectDesign {
    pub fn points_per_transect(&self) -> usize {
        (self.length_mm / self.spacing_mm + 1e-9).floor() as usize + 1
    }

    fn validate(&self) -> Result<()> {
        if self.count == 0 || !(self.spacing_mm > 0.0) || !(self.length_mm >= self.spacing_mm) {
            return Err(Error::invalid(format!("invalid transect design {self:?}")));
        }
        Ok(())
    }
}

/// Add `r` to every sample point `x0 + k h` strictly inside the chord
/// `|x - cx| < w` cut by a cylinder at lateral offset `dy`.
fn add_chord(heights: &mut [f64], x0: f64, h: f64, cx: f64, dy: f64, r: f64) {
    let w2 = r * r - dy * dy;
    if w2 <= 0.0 || heights.is_empty() {
        return;
    }
    let w = w2.sqrt();
    let last = heights.len() as isize - 1;
    let inside = |k: isize| {
        let dx = x0 + k as f64 * h - cx;
        dx * dx + dy * dy < r * r
    };
    let mut lo = (((cx - w - x0) / h).ceil() as isize - 1).max(0);
    let mut hi = (((cx + w - x0) / h).floor() as isize + 1).min(last);
    while lo <= hi && !inside(lo) {
        lo += 1;
    }
    while hi >= lo && !inside(hi) {
        hi -= 1;
    }
    if lo <= hi {
        for v in &mut heights[lo as usize..=hi as usize] {
            *v += r;
        }
    }
}

/// Sample `count` horizontal transects from a simulated process. Transect `k`
/// sits at a uniform height inside the k-th of `count` equal horizontal bands
/// of the window, with a uniform horizontal start.
pub fn sample_transects(
    process: &CylinderProcess,
    count: usize,
    length_mm: f64,
    spacing_mm: f64,
    seed: u64,
) -> Result<SurfaceSample> {
    let design = TransectDesign {
        count,
        length_mm,
        spacing_mm,
    };
    design.validate()?;
    let win = process.window;
    if win.width() < length_mm {
        return Err(Error::invalid(format!(
            "window width {} mm is shorter than the {length_mm} mm transects",
            win.width()
        )));
    }
    let mut rng = rng_from_seed(stream_seed(seed, &[label::PLACEMENT]));
    let npts = design.points_per_transect();
    let band = win.height() / count as f64;
    let mut transects = Vec::with_capacity(count);
    for k in 0..count {
        let y = win.y0 + band * (k as f64 + rng.random::<f64>());
        let x0 = win.x0 + rng.random::<f64>() * (win.width() - length_mm);
        let mut heights = vec![0.0; npts];
        for (c, r) in process.centers.iter().zip(&process.radii) {
            let dy = c[1] - y;
            if dy.abs() < *r {
                add_chord(&mut heights, x0, spacing_mm, c[0], dy, *r);
            }
        }
        transects.push(heights);
    }
    SurfaceSample::new(transects, spacing_mm)
}

/// Heights along a single transect of the cylinder surface, simulating only
/// the cylinders that cross the line.
///
/// Restricted to a line, the process is again marked Poisson: crossing
/// centres occur at linear rate `2 alpha / beta^2`, radii follow
/// Gamma(2, beta) and the lateral offset is uniform on `(-r, r)`.
pub fn simulate_line_transect(alpha: f64, beta: f64, length_mm: f64, spacing_mm: f64, seed: u64) -> Result<Vec<f64>> {
    check_intensity(alpha, beta)?;
    let design = TransectDesign {
        count: 1,
        length_mm,
        spacing_mm,
    };
    design.validate()?;
    let buffer = radius_buffer(beta);
    let span = length_mm + 2.0 * buffer;
    let mut rng = rng_from_seed(seed);
    let count = poisson_count(2.0 * alpha / (beta * beta) * span, &mut rng)?;
    let exp = Exp::new(beta).expect("positive rate");
    let mut heights = vec![0.0; design.points_per_transect()];
    for _ in 0..count {
        let cx = -buffer + rng.random::<f64>() * span;
        let r = exp.sample(&mut rng) + exp.sample(&mut rng);
        let dy = r * (2.0 * rng.random::<f64>() - 1.0);
        add_chord(&mut heights, 0.0, spacing_mm, cx, dy, r);
    }
    Ok(heights)
}

/// Synthetic survey of independent transects (one stream per transect).
pub fn simulate_transect_sample(alpha: f64, beta: f64, design: &TransectDesign, seed: u64) -> Result<SurfaceSample> {
    design.validate()?;
    let transects = (0..design.count)
        .map(|k| {
            simulate_line_transect(
                alpha,
                beta,
                design.length_mm,
                design.spacing_mm,
                stream_seed(seed, &[label::TRANSECT, k as u64]),
            )
        })
        .collect::<Result<_>>()?;
    SurfaceSample::new(transects, design.spacing_mm)
}
