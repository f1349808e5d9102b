//! Boundary contributions to the metric anomaly of torsion for conformal
//! families of metrics on collars `[0, 1) × T^{m−1}`, `m ∈ {2, 3}`.
//!
//! Dimension 2 uses `g_u = f (dx² + dy²)`, dimension 3 uses
//! `g_u = f² (dx² + dy² + dz²)`. The boundary is `x = 0` with unit inward
//! normal `∂_x`. In dimension 3 the mean curvature is taken as `∂_x(f²)` in
//! the coordinate frame, without normalizing by `f`.

mod expr;
mod jet;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub use expr::{Expr, Function};
pub use jet::Jet;

use crate::error::{Error, Result};

/// Preset families: `1 + u x` in dimension 2, `1 + x + u x` in dimension 3.
pub fn preset_expression(dim: usize) -> Option<&'static str> {
    match dim {
        2 => Some("1+u*x"),
        3 => Some("1+x+u*x"),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct FamilySpec {
    dim: usize,
    f: String,
    #[serde(default = "unit")]
    cross_section_volume: f64,
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FamilySpec", into = "FamilySpec")]
pub struct ConformalFamily {
    pub dim: usize,
    source: String,
    expr: Expr,
    /// Volume of the flat boundary cross-section `S¹` or `T²`.
    pub cross_section_volume: f64,
}

impl TryFrom<FamilySpec> for ConformalFamily {
    type Error = Error;
    fn try_from(s: FamilySpec) -> Result<Self> {
        Ok(Self::new(s.dim, &s.f)?.with_cross_section_volume(s.cross_section_volume)?)
    }
}

impl From<ConformalFamily> for FamilySpec {
    fn from(c: ConformalFamily) -> Self {
        FamilySpec { dim: c.dim, f: c.source, cross_section_volume: c.cross_section_volume }
    }
}

/// Basis forms of degree `q` with their Euclidean star images and signs.
fn basis(dim: usize, q: usize) -> &'static [(&'static str, &'static str, f64)] {
    match (dim, q) {
        (2, 0) => &[("1", "dx∧dy", 1.0)],
        (2, 1) => &[("dx", "dy", 1.0), ("dy", "dx", -1.0)],
        (2, 2) => &[("dx∧dy", "1", 1.0)],
        (3, 0) => &[("1", "dx∧dy∧dz", 1.0)],
        (3, 1) => &[("dx", "dy∧dz", 1.0), ("dy", "dz∧dx", 1.0), ("dz", "dx∧dy", 1.0)],
        (3, 2) => &[("dy∧dz", "dx", 1.0), ("dz∧dx", "dy", 1.0), ("dx∧dy", "dz", 1.0)],
        (3, 3) => &[("dx∧dy∧dz", "1", 1.0)],
        _ => &[],
    }
}

/// `V_p = w_p f'/f`.
fn v_weights(dim: usize) -> &'static [f64] {
    if dim == 2 {
        &[-1.0, 0.0, 1.0]
    } else {
        &[-3.0, -1.0, 1.0, 3.0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct StarEntry {
    pub form: &'static str,
    pub image: &'static str,
    pub coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StarTable {
    pub dim: usize,
    pub p: usize,
    pub entries: Vec<StarEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PsiTables {
    pub psi: Vec<f64>,
    pub psi_n: Vec<f64>,
    pub psi_d: Vec<f64>,
}

impl PsiTables {
    pub fn for_dim(dim: usize) -> Self {
        let (n, d) = if dim == 2 {
            (vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 1.0])
        } else {
            (vec![1.0, 2.0, 1.0, 0.0], vec![0.0, 1.0, 2.0, 1.0])
        };
        let psi = n.iter().zip(&d).map(|(a, b)| a - b).collect();
        Self { psi, psi_n: n, psi_d: d }
    }
}

/// Alternating sums of the dimension-3 terms that cancel identically.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Cancellations {
    /// `Σ (−1)^p 4 ψ_p (V_p)_{;;N}`.
    pub second_normal: f64,
    /// `Σ (−1)^p (V_p)_{;N} (ψ_N^p + 5ψ_D^p) k`.
    pub curvature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AnomalyCoefficients {
    pub dim: usize,
    pub u: f64,
    #[serde(rename = "d")]
    pub d_per_degree: Vec<f64>,
    #[serde(rename = "sum")]
    pub alternating_sum: f64,
    pub psi_tables: PsiTables,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_curvature: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cancellations: Option<Cancellations>,
}

impl ConformalFamily {
    pub fn new(dim: usize, f: &str) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::invalid(format!("conformal families are implemented in dimensions 2 and 3, got {dim}")));
        }
        let expr: Expr = f.parse()?;
        Ok(Self { dim, source: f.to_string(), expr, cross_section_volume: 1.0 })
    }

    pub fn preset(dim: usize) -> Result<Self> {
        let f = preset_expression(dim).ok_or_else(|| Error::invalid(format!("no preset family in dimension {dim}")))?;
        Self::new(dim, f)
    }

    pub fn with_cross_section_volume(mut self, v: f64) -> Result<Self> {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::invalid("cross-section volume must be positive"));
        }
        self.cross_section_volume = v;
        Ok(self)
    }

    pub fn expression(&self) -> &str {
        &self.source
    }

    fn f(&self, x: f64, u: f64) -> Result<Jet> {
        let j = self.expr.jet(x, u);
        if !j.is_finite() {
            return Err(Error::NonFinite(format!("f = {} at (x, u) = ({x}, {u})", self.source)));
        }
        if j.value() <= 0.0 {
            return Err(Error::precondition(format!("f = {} is not positive at (x, u) = ({x}, {u})", self.source)));
        }
        Ok(j)
    }

    fn check_degree(&self, p: usize) -> Result<()> {
        if p > self.dim {
            return Err(Error::invalid(format!("form degree {p} exceeds dimension {}", self.dim)));
        }
        Ok(())
    }

    /// Power of `f` in the star coefficient on degree-`q` forms.
    fn star_power(&self, q: usize) -> i32 {
        let (m, q) = (self.dim as i32, q as i32);
        if self.dim == 2 {
            (m - 2 * q) / 2
        } else {
            m - 2 * q
        }
    }

    fn star_jet(&self, q: usize, x: f64, u: f64) -> Result<Jet> {
        Ok(self.f(x, u)?.powi(self.star_power(q)))
    }

    /// `f > 0` on the collar `x ∈ [0, 1]` at parameter `u`.
    pub fn check_positive(&self, u: f64) -> Result<()> {
        for i in 0..=64 {
            self.f(i as f64 / 64.0, u)?;
        }
        Ok(())
    }

    /// `∂_u f(0, u) = 0`, so that every `V_p` vanishes on the boundary.
    pub fn check_boundary_stationary(&self, u: f64) -> Result<()> {
        let j = self.f(0.0, u)?;
        if j.du().abs() > 1e-12 * j.value().abs().max(1.0) {
            return Err(Error::precondition(format!(
                "family f = {} is not boundary-stationary: ∂f/∂u(0, {u}) = {:e}; the reduced boundary formula \
                 requires V_p = 0 on the boundary, i.e. ∂f/∂u = 0 at x = 0",
                self.source,
                j.du()
            )));
        }
        Ok(())
    }
}

/// Coefficients of the Hodge star on the basis `p`-forms at `(x, u)`.
pub fn hodge_star_conformal(fam: &ConformalFamily, p: usize, x: f64, u: f64) -> Result<StarTable> {
    fam.check_degree(p)?;
    let c = fam.star_jet(p, x, u)?.value();
    let entries =
        basis(fam.dim, p).iter().map(|&(form, image, sign)| StarEntry { form, image, coefficient: sign * c }).collect();
    Ok(StarTable { dim: fam.dim, p, entries })
}

/// `V_p = (∂_u *) ∘ *^{−1}` on `Λ^p` as a jet in `x`, from differentiating
/// the star on `Λ^{m−p}`.
fn v_from_star(fam: &ConformalFamily, p: usize, x: f64, u: f64) -> Result<Jet> {
    let c = fam.star_jet(fam.dim - p, x, u)?;
    Ok(c.partial_u() / c)
}

fn v_closed_form(fam: &ConformalFamily, p: usize, x: f64, u: f64) -> Result<Jet> {
    let f = fam.f(x, u)?;
    Ok((f.partial_u() / f) * Jet::constant(v_weights(fam.dim)[p]))
}

/// `V_p` at `(x, u)` with its first two normal derivatives, cross-checked
/// between the closed-form table and the differentiated star.
pub fn v_jet(fam: &ConformalFamily, p: usize, x: f64, u: f64) -> Result<Jet> {
    fam.check_degree(p)?;
    let a = v_closed_form(fam, p, x, u)?;
    let b = v_from_star(fam, p, x, u)?;
    for (name, va, vb) in [("V", a.value(), b.value()), ("∂_x V", a.dx(), b.dx()), ("∂²_x V", a.dxx(), b.dxx())] {
        if (va - vb).abs() > 1e-10 * va.abs().max(1.0) {
            return Err(Error::Internal(format!(
                "{name}_{p} disagrees at (x, u) = ({x}, {u}): table {va:e}, differentiated star {vb:e}"
            )));
        }
    }
    Ok(a)
}

pub fn v_operator(fam: &ConformalFamily, p: usize, x: f64, u: f64) -> Result<f64> {
    Ok(v_jet(fam, p, x, u)?.value())
}

/// `k(u) = ∂_x(f²)` at `x = 0`.
pub fn mean_curvature(fam: &ConformalFamily, u: f64) -> Result<f64> {
    if fam.dim != 3 {
        return Err(Error::invalid("mean curvature enters only the dimension-3 formula"));
    }
    let f = fam.f(0.0, u)?;
    Ok((f * f).dx())
}

/// Boundary contributions `d_p` and their alternating sum at parameter `u`.
pub fn anomaly_coefficients(fam: &ConformalFamily, u: f64) -> Result<AnomalyCoefficients> {
    fam.check_positive(u)?;
    fam.check_boundary_stationary(u)?;
    let psi = PsiTables::for_dim(fam.dim);
    let vs = (0..=fam.dim).map(|p| v_jet(fam, p, 0.0, u)).collect::<Result<Vec<_>>>()?;
    let vol = fam.cross_section_volume;
    let sign = |p: usize| if p % 2 == 0 { 1.0 } else { -1.0 };
    let (d, mean_curvature, cancellations) = if fam.dim == 2 {
        let d: Vec<f64> = vs.iter().zip(&psi.psi).map(|(v, s)| vol * s * v.dx() / (8.0 * PI)).collect();
        (d, None, None)
    } else {
        let k = mean_curvature(fam, u)?;
        let s_p = [0.0, -k, -k, 0.0];
        let d: Vec<f64> = (0..4)
            .map(|p| {
                let v = &vs[p];
                let bracket =
                    4.0 * psi.psi[p] * v.dxx() + v.dx() * ((psi.psi_n[p] + 5.0 * psi.psi_d[p]) * k + 16.0 * s_p[p]);
                vol * bracket / (256.0 * PI)
            })
            .collect();
        let second_normal = (0..4).map(|p| sign(p) * 4.0 * psi.psi[p] * vs[p].dxx()).sum();
        let curvature = (0..4).map(|p| sign(p) * vs[p].dx() * (psi.psi_n[p] + 5.0 * psi.psi_d[p]) * k).sum();
        (d, Some(k), Some(Cancellations { second_normal, curvature }))
    };
    let alternating_sum = d.iter().enumerate().map(|(p, v)| sign(p) * v).sum();
    Ok(AnomalyCoefficients {
        dim: fam.dim,
        u,
        d_per_degree: d,
        alternating_sum,
        psi_tables: psi,
        mean_curvature,
        cancellations,
    })
}

/// Anomaly of `N × S^{2k}` from that of `N`: multiplication by `χ(S^{2k}) = 2`.
pub fn product_lift(base_sum: f64) -> f64 {
    2.0 * base_sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn euclidean_star() {
        let fam = ConformalFamily::new(2, "1").unwrap();
        for p in 0..=2 {
            for e in hodge_star_conformal(&fam, p, 0.3, 0.7).unwrap().entries {
                assert_eq!(e.coefficient.abs(), 1.0);
            }
        }
        assert!(hodge_star_conformal(&fam, 3, 0.0, 0.0).is_err());
    }

    #[test]
    fn star_tables() {
        let fam = ConformalFamily::preset(2).unwrap();
        let t0 = hodge_star_conformal(&fam, 0, 1.0, 0.5).unwrap();
        assert_eq!(t0.entries[0].coefficient, 1.5);
        let t1 = hodge_star_conformal(&fam, 1, 1.0, 0.5).unwrap();
        assert_eq!(t1.entries.iter().map(|e| e.coefficient).collect::<Vec<_>>(), vec![1.0, -1.0]);
        let fam3 = ConformalFamily::preset(3).unwrap();
        let f: f64 = 1.0 + 0.4 + 0.2 * 0.4;
        assert_relative_eq!(
            hodge_star_conformal(&fam3, 3, 0.4, 0.2).unwrap().entries[0].coefficient,
            f.powi(-3),
            max_relative = 1e-15
        );
        assert_relative_eq!(hodge_star_conformal(&fam3, 0, 0.4, 0.2).unwrap().entries[0].coefficient, f.powi(3), max_relative = 1e-15);
        assert!(hodge_star_conformal(&fam3, 2, 0.4, 0.2).unwrap().entries.iter().all(|e| (e.coefficient - 1.0 / f).abs() < 1e-15));
    }

    #[test]
    fn v_values() {
        let fam = ConformalFamily::preset(2).unwrap();
        assert_eq!(v_operator(&fam, 0, 1.0, 0.0).unwrap(), -1.0);
        assert_eq!(v_operator(&fam, 1, 1.0, 0.3).unwrap(), 0.0);
        for p in 0..=2 {
            assert_eq!(v_operator(&fam, p, 0.0, 0.9).unwrap(), 0.0);
        }
        let fam3 = ConformalFamily::preset(3).unwrap();
        for p in 0..=3 {
            let a = v_operator(&fam3, p, 0.5, 0.5).unwrap();
            let b = v_operator(&fam3, 3 - p, 0.5, 0.5).unwrap();
            assert_relative_eq!(a, -b, epsilon = 1e-15);
        }
    }

    #[test]
    fn mean_curvature_values() {
        let fam3 = ConformalFamily::preset(3).unwrap();
        for u in [0.0, 0.3, 2.0] {
            assert_relative_eq!(mean_curvature(&fam3, u).unwrap(), 2.0 * (1.0 + u), max_relative = 1e-15);
        }
        assert_eq!(mean_curvature(&ConformalFamily::new(3, "1+u").unwrap(), 0.5).unwrap(), 0.0);
        assert!(mean_curvature(&ConformalFamily::preset(2).unwrap(), 0.0).is_err());
    }

    #[test]
    fn dimension_two_example() {
        let a = anomaly_coefficients(&ConformalFamily::preset(2).unwrap(), 0.0).unwrap();
        let e = -1.0 / (8.0 * PI);
        assert_relative_eq!(a.d_per_degree[0], e, epsilon = 1e-12);
        assert_eq!(a.d_per_degree[1], 0.0);
        assert_relative_eq!(a.d_per_degree[2], e, epsilon = 1e-12);
        assert_relative_eq!(a.alternating_sum, -1.0 / (4.0 * PI), epsilon = 1e-12);
    }

    #[test]
    fn dimension_three_example() {
        let fam = ConformalFamily::preset(3).unwrap();
        for u in [0.0, 0.1, 0.5, 1.0] {
            let a = anomaly_coefficients(&fam, u).unwrap();
            assert_relative_eq!(a.alternating_sum, -(1.0 + u) / (4.0 * PI), epsilon = 1e-12);
            let c = a.cancellations.unwrap();
            assert!(c.second_normal.abs() < 1e-12 && c.curvature.abs() < 1e-12);
            assert_relative_eq!(a.alternating_sum, -a.mean_curvature.unwrap() / (8.0 * PI), epsilon = 1e-12);
        }
    }

    #[test]
    fn u_independent_family_has_no_anomaly() {
        for (dim, f) in [(2, "1+x^2"), (3, "exp(x)")] {
            let a = anomaly_coefficients(&ConformalFamily::new(dim, f).unwrap(), 0.4).unwrap();
            assert!(a.d_per_degree.iter().all(|&d| d == 0.0));
        }
    }

    #[test]
    fn rejects_non_stationary_family() {
        let err = anomaly_coefficients(&ConformalFamily::new(2, "1+u+x").unwrap(), 0.2).unwrap_err();
        assert!(err.to_string().contains("boundary-stationary"));
        assert!(anomaly_coefficients(&ConformalFamily::new(2, "x-0.5").unwrap(), 0.0).is_err());
        assert!(ConformalFamily::new(4, "1").is_err());
    }

    #[test]
    fn volume_scales_linearly() {
        let fam = ConformalFamily::preset(3).unwrap().with_cross_section_volume(2.5).unwrap();
        let a = anomaly_coefficients(&fam, 0.5).unwrap();
        assert_relative_eq!(a.alternating_sum, -2.5 * 1.5 / (4.0 * PI), epsilon = 1e-12);
    }

    #[test]
    fn product_lifts() {
        assert_relative_eq!(product_lift(-1.0 / (4.0 * PI)), -1.0 / (2.0 * PI));
        assert_eq!(product_lift(0.0), 0.0);
    }

    #[test]
    fn serde_round_trip() {
        let fam: ConformalFamily = serde_json::from_str(r#"{"dim": 3, "f": "1+x+u*x"}"#).unwrap();
        assert_eq!(fam, ConformalFamily::preset(3).unwrap());
        assert!(serde_json::from_str::<ConformalFamily>(r#"{"dim": 3, "f": "1+"}"#).is_err());
    }

    proptest! {
        #[test]
        fn star_and_table_agree(a in -0.9f64..0.9, b in -0.9f64..0.9, c in 0.1f64..2.0, x in 0.0f64..1.0, u in -0.5f64..0.5, dim in 2usize..=3) {
            let src = format!("{c} + {a}*u*x + {b}*x^2*u^2 + 0.3*sin(x)");
            let fam = ConformalFamily::new(dim, &src).unwrap();
            prop_assume!(fam.check_positive(u).is_ok());
            for p in 0..=dim {
                // v_jet raises an internal error on any disagreement beyond 1e−10.
                v_jet(&fam, p, x, u).unwrap();
            }
            if dim == 2 {
                prop_assert_eq!(v_operator(&fam, 1, x, u).unwrap(), 0.0);
            }
        }
    }
}
