//! Spectral density functions, zeta-regularized determinants and torsion,
//! hyperbolic torsion constants, heat-kernel comparisons on model domains,
//! metric anomaly coefficients and the torsion of 3-manifolds from their
//! JSJ pieces.

pub mod error;
pub mod quadrature;
pub mod sdf;
pub mod zeta;
pub mod hyperbolic;
pub mod heat;
pub mod anomaly;
pub mod jsj;
pub mod acceptance;

pub use error::{Error, Result};
