//! Generic contrast-based posterior machinery, independent of any model:
//! posterior tabulation, MAP search, posterior-shape information, Monte-Carlo
//! sandwich variances and confidence regions.

mod finite_diff;
mod map;
mod param;
mod posterior;
mod prior;
mod problem;
mod sandwich;

pub use finite_diff::{finite_difference_gradient, finite_difference_hessian, gradient_or_fd, hessian_or_fd, FdStep};
pub use map::{golden_section, map_estimate, nelder_mead, newton_minimize, MapEstimate, MapOptions};
pub use param::{ParamBox, ParamPoint};
pub use posterior::{evaluate_cb_posterior, info_from_posterior, posterior_moments, GridAxis, PosteriorGrid, PosteriorInfo};
pub use prior::Prior;
pub use problem::{Contrast, FnContrast, QuadraticContrast, Resimulate};
pub use sandwich::{
    confidence_region, limit_distribution, mc_derivatives, mc_estimate_gamma, mc_estimate_info, replication_seed,
    ConfidenceRegion, LimitDistribution, McDerivatives,
};
