//! Heat-trace densities on hyperbolic space, the torsion-per-volume
//! constant, and the geometry of cusp ends.

mod plancherel;

use serde::{Deserialize, Serialize};

pub use plancherel::{Branch, DensityTrace, PlancherelRow, PlancherelTable, TableChecks, H3_TABLE_JSON};

use crate::error::{Error, Result};
use crate::zeta::{analytic_torsion, HeatTrace, TorsionResult};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TorsionConstant {
    pub m: usize,
    pub value: f64,
    pub error_estimate: f64,
    /// Absent for even `m`, where the constant vanishes by duality.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub torsion: Option<TorsionResult>,
}

/// Analytic torsion per unit volume, `C_m`, from the densities in `table`.
/// `rel_tol` is the relative tolerance of each density quadrature.
pub fn torsion_constant(table: &PlancherelTable, rel_tol: f64) -> Result<TorsionConstant> {
    let m = table.m;
    let traces = (0..=m).map(|p| DensityTrace::new(table, p, rel_tol)).collect::<Result<Vec<_>>>()?;
    let refs: Vec<&dyn HeatTrace> = traces.iter().map(|t| t as &dyn HeatTrace).collect();
    let torsion = analytic_torsion(&refs)?;
    Ok(TorsionConstant { m, value: torsion.total, error_estimate: torsion.error_estimate, torsion: Some(torsion) })
}

/// `C_m` for a dimension: even `m` gives 0 by duality; odd `m` needs a table.
pub fn torsion_constant_for(m: usize, table: Option<&PlancherelTable>, rel_tol: f64) -> Result<TorsionConstant> {
    if m % 2 == 0 {
        return Ok(TorsionConstant { m, value: 0.0, error_estimate: 0.0, torsion: None });
    }
    match table {
        Some(t) if t.m == m => torsion_constant(t, rel_tol),
        Some(t) => Err(Error::invalid(format!("table is for m = {}, asked for m = {m}", t.m))),
        None => Err(Error::invalid(format!("no Plancherel table for m = {m}"))),
    }
}

/// A cusp end `[R, ∞) × F` with metric `du² + e^{−2u} dx²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CuspEnd {
    pub cross_section_volume: f64,
    pub base_height: f64,
}

impl CuspEnd {
    pub fn new(cross_section_volume: f64, base_height: f64) -> Result<Self> {
        if !(cross_section_volume > 0.0 && cross_section_volume.is_finite()) {
            return Err(Error::invalid("cross-section volume must be positive"));
        }
        if !base_height.is_finite() {
            return Err(Error::invalid("base height must be finite"));
        }
        Ok(Self { cross_section_volume, base_height })
    }

    pub fn at(self, height: f64) -> Self {
        Self { base_height: height, ..self }
    }
}

/// `vol(F) ∫_R^∞ e^{−(m−1)u} du = vol(F) e^{−(m−1)R}/(m−1)`.
pub fn cusp_volume(end: &CuspEnd, m: usize) -> Result<f64> {
    if m < 2 {
        return Err(Error::invalid(format!("cusp ends need m ≥ 2, got {m}")));
    }
    let k = (m - 1) as f64;
    Ok(end.cross_section_volume * (-k * end.base_height).exp() / k)
}

/// `vol(M_R) = vol(M) − Σ_j vol(E_j at height R)`.
pub fn truncated_volume(total: f64, ends: &[CuspEnd], height: f64, m: usize) -> Result<f64> {
    let cusps: f64 = ends.iter().map(|e| cusp_volume(&e.at(height), m)).sum::<Result<f64>>()?;
    if !(total >= cusps) {
        return Err(Error::precondition(format!("total volume {total} is below the cusp volume {cusps} at R = {height}")));
    }
    Ok(total - cusps)
}
