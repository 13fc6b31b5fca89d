//! Transect ingestion, kernel detrending and sample moments.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::read_manifest;
use crate::simulate::SurfaceSample;

/// Fewest heights accepted in a transect.
pub const MIN_TRANSECT_POINTS: usize = 10;

pub const DEFAULT_BANDWIDTH_MM: f64 = 100.0;

/// Path averages of the height and squared height over `nu_a` mm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentPair {
    pub m1: f64,
    pub m2: f64,
    pub nu_a: f64,
}

impl MomentPair {
    pub fn new(m1: f64, m2: f64, nu_a: f64) -> Result<Self> {
        if !(nu_a > 0.0) || !m1.is_finite() || !m2.is_finite() {
            return Err(Error::invalid(format!("invalid moments ({m1}, {m2}) over {nu_a} mm")));
        }
        if m2 < m1 * m1 * (1.0 - 1e-12) {
            return Err(Error::invalid(format!("second moment {m2} below squared mean {}", m1 * m1)));
        }
        Ok(Self { m1, m2, nu_a })
    }
}

/// Pooled mean height and mean squared height.
pub fn sample_moments(sample: &SurfaceSample) -> MomentPair {
    let (mut s1, mut s2, mut count) = (0.0, 0.0, 0usize);
    for h in sample.transects().iter().flatten() {
        s1 += h;
        s2 += h * h;
        count += 1;
    }
    let m1 = s1 / count as f64;
    let m2 = (s2 / count as f64).max(m1 * m1);
    MomentPair {
        m1,
        m2,
        nu_a: sample.nu_a(),
    }
}

/// Reads the transects listed in a manifest.
pub fn load_transects(manifest: &Path) -> Result<SurfaceSample> {
    let set = read_manifest(manifest)?;
    for (file, h) in set.files.iter().zip(&set.heights) {
        if h.len() < MIN_TRANSECT_POINTS {
            return Err(Error::Parse {
                path: file.clone(),
                line: 0,
                message: format!("{} heights, need at least {MIN_TRANSECT_POINTS}", h.len()),
            });
        }
    }
    SurfaceSample::new(set.heights, set.spacing)
}

/// Removes a Nadaraya–Watson Gaussian-kernel trend and restores the mean:
/// `y - smooth(y) + mean(y)`.
pub fn detrend_kernel(heights: &[f64], spacing: f64, bandwidth: f64) -> Result<Vec<f64>> {
    if heights.len() < MIN_TRANSECT_POINTS {
        return Err(Error::invalid(format!(
            "transect has {} heights, need at least {MIN_TRANSECT_POINTS}",
            heights.len()
        )));
    }
    if !(spacing > 0.0 && bandwidth > spacing && bandwidth.is_finite()) {
        return Err(Error::invalid(format!("need bandwidth {bandwidth} > spacing {spacing} > 0")));
    }
    let n = heights.len();
    let mean = heights.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = heights.iter().map(|h| h - mean).collect();
    let reach = ((8.0 * bandwidth / spacing).ceil() as usize).min(n);
    let kernel: Vec<f64> = (0..=reach)
        .map(|k| (-0.5 * (k as f64 * spacing / bandwidth).powi(2)).exp())
        .collect();
    Ok((0..n)
        .map(|i| {
            let (lo, hi) = (i.saturating_sub(reach), (i + reach).min(n - 1));
            let (mut num, mut den) = (0.0, 0.0);
            for (j, c) in centered.iter().enumerate().take(hi + 1).skip(lo) {
                let w = kernel[i.abs_diff(j)];
                num += w * c;
                den += w;
            }
            heights[i] - num / den
        })
        .collect())
}

/// Detrends every transect of a sample.
pub fn detrend_sample(sample: &SurfaceSample, bandwidth: f64) -> Result<SurfaceSample> {
    let transects = sample
        .transects()
        .iter()
        .map(|t| detrend_kernel(t, sample.spacing(), bandwidth))
        .collect::<Result<_>>()?;
    SurfaceSample::new(transects, sample.spacing())
}
