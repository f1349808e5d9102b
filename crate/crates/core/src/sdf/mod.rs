//! Spectral density functions of maps and cochain complexes over traced
//! finite-dimensional inner-product spaces.

mod checks;
mod complex;
mod density;
mod inequality;
pub mod linalg;
mod random;
mod space;

pub use checks::{
    check_adjoint, check_basic_f, check_block_matrix_f, check_gromov_shubin, check_short_exact, diagonal_map,
    laplacian_sdf_decomposition, variational_sdf, HomotopyEquivalence, ShortExactConstants, ShortExactReport,
};
pub use complex::{FiniteCochainComplex, ShortExactTriple};
pub use density::{ExponentFit, SpectralDensity};
pub use inequality::{probe_points, CheckReport, Inequality, Probe, Term, Violation, ARGUMENT_SLACK, VALUE_TOL};
pub use random::{homotopy_instance, run_suite, short_exact_instance, HomotopyInstance, InstanceGen, Suite, SuiteReport};
pub use space::{TracedMap, TracedSpace};
