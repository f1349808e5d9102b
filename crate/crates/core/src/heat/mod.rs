//! Heat kernels of one-dimensional model domains and the comparison of a
//! subdomain's kernel with the ambient one away from the boundary.

mod compare;
mod kernel;

pub use compare::{
    boundary_insensitivity_check, sup_bound_check, ComparisonReport, ComparisonRow, HeatGrid, KLevel, SupBound,
    SweepEntry, C2_SWEEP,
};
pub use kernel::{gaussian, kernel_1d, Domain1D};
