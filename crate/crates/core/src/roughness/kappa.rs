//! The overlap constant `kappa` entering the second-moment variance.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::quadrature::{adaptive_2d, composite_2d, graded_breakpoints, AdaptiveOptions, Rule};

/// Value obtained from both quadrature schemes (they agree to ~1e-12).
pub const KAPPA_REFERENCE: f64 = 4.6998249271417813e-4;

/// Relative disagreement above which the two schemes are rejected.
pub const KAPPA_SCHEME_TOLERANCE: f64 = 1e-4;

/// `arccos(u) - u sqrt(1 - u^2)`.
fn lens(u: f64) -> f64 {
    u.acos() - u * (1.0 - u * u).max(0.0).sqrt()
}

pub fn kappa_integrand(u: f64, v: f64) -> f64 {
    let s = u + v;
    if s <= 0.0 {
        return 0.0;
    }
    let uv = u * v;
    lens(u) * lens(v) * uv.powi(5) / s.powi(11)
}

/// Composite tensor Gauss–Legendre after `u = s^2, v = t^2`, which removes
/// the `1/r` growth at the origin, on panels graded toward both ends.
pub fn kappa_tensor_gauss() -> f64 {
    let b = graded_breakpoints(40);
    composite_2d(&Rule::new(20), &b, &b, |s, t| 4.0 * s * t * kappa_integrand(s * s, t * t))
}

/// Globally adaptive subdivision on the original square.
pub fn kappa_adaptive() -> Result<f64> {
    let opts = AdaptiveOptions {
        order: 7,
        rel_tol: 1e-9,
        max_cells: 4_000_000,
    };
    Ok(adaptive_2d(kappa_integrand, (0.0, 1.0), (0.0, 1.0), &opts)?.value)
}

/// Both schemes, checked against each other.
pub fn kappa_cross_checked() -> Result<f64> {
    let first = kappa_tensor_gauss();
    let second = kappa_adaptive()?;
    let relative = (first - second).abs() / first.abs().max(second.abs());
    if !(relative <= KAPPA_SCHEME_TOLERANCE) {
        return Err(Error::QuadratureMismatch {
            first,
            second,
            relative,
        });
    }
    Ok(first)
}

static KAPPA: OnceLock<Result<f64>> = OnceLock::new();

/// `kappa`, computed once per process.
pub fn kappa_constant() -> Result<f64> {
    match KAPPA.get_or_init(kappa_cross_checked) {
        Ok(v) => Ok(*v),
        Err(Error::QuadratureMismatch {
            first,
            second,
            relative,
        }) => Err(Error::QuadratureMismatch {
            first: *first,
            second: *second,
            relative: *relative,
        }),
        Err(e) => Err(Error::ResourceLimit(format!("kappa unavailable: {e}"))),
    }
}
