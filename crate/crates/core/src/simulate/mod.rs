//! Seeded generators for the three spatial data types.

mod cylinders;
mod field;
mod grf;
mod markov;

pub use cylinders::{
    evaluate_surface, radius_buffer, sample_transects, simulate_cylinder_surface, simulate_line_transect,
    simulate_transect_sample, CylinderProcess, Rect, SurfaceSample, TransectDesign, MAX_EXPECTED_CYLINDERS,
};
pub use field::LatticeField;
pub use grf::{simulate_grf_exponential, GrfSampler, MAX_GRF_NODES};
pub use markov::{simulate_markov_field, DEFAULT_SWEEPS};
