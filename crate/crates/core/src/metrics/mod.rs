//! Distances between samples and densities, plus log–log slope fitting.

mod assignment;
mod slope;
mod tv;
mod wasserstein;

pub use assignment::{solve_assignment, w1_assignment, w1_assignment_capped, DEFAULT_ASSIGNMENT_CAP};
pub use slope::{slope_fit, SlopeFit};
pub use tv::{tv_1d, Density1D};
pub use wasserstein::{w1_1d, w1_sliced, TransportMethod, TransportResult};
