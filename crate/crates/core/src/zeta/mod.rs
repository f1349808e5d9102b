//! Zeta-regularized determinants and analytic torsion from heat traces.

mod bounds;
pub mod cim;
mod spectrum;
mod torsion;
mod trace;

pub use bounds::{check_ew, ew_rhs, goal_double_integral, EwProbe, EwReport, GoalIntegral};
pub use cim::{c_im, Convention, CimResolution, CimRow, EULER_GAMMA};
pub use spectrum::Spectrum;
pub use torsion::{
    analytic_torsion, asympt_fit, cheeger_mueller_correction, d_small, large_time_integral, tail_bound,
    zeta_det, zeta_det_spectrum, zeta_prime, AsymptoticFit, DegreeTorsion, DeterminantClass, LargeTime,
    TorsionResult, Value, ZetaDet,
};
pub use trace::{expansion, CircleTrace, Decay, HeatTrace, SpectrumTrace, SyntheticTrace};
