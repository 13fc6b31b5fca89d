//! Cylinder-surface roughness: moment formulas, the `kappa` constant,
//! transect handling and the weighted-least-squares posterior fit.

mod fit;
mod kappa;
mod moments;
mod transects;

pub use fit::{
    default_prior, run_roughness_fit, wls_contrast, RoughnessFit, RoughnessFitConfig, RoughnessResimulator, WlsContrast,
};
pub use kappa::{
    kappa_adaptive, kappa_constant, kappa_cross_checked, kappa_integrand, kappa_tensor_gauss, KAPPA_REFERENCE,
    KAPPA_SCHEME_TOLERANCE,
};
pub use moments::{asymptotic_variance_v, expected_moments, info_matrix_moments, RoughnessModel, RoughnessParams};
pub use transects::{
    detrend_kernel, detrend_sample, load_transects, sample_moments, MomentPair, DEFAULT_BANDWIDTH_MM,
    MIN_TRANSECT_POINTS,
};
