use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quadrature::Quadrature;
use crate::zeta::{Decay, HeatTrace};

/// The shipped `m = 3` table.
pub const H3_TABLE_JSON: &str = include_str!("../../../../data/plancherel_h3.json");

/// One spectral branch: `λ = r² + shift` with density
/// `π^{piPower} Σ_k polynomial[k] r^k` on `r ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Branch {
    pub shift: f64,
    pub pi_power: i32,
    pub polynomial: Vec<f64>,
}

impl Branch {
    fn scale(&self) -> f64 {
        PI.powi(self.pi_power)
    }

    pub fn density(&self, r: f64) -> f64 {
        self.scale() * self.polynomial.iter().rev().fold(0.0, |acc, &c| acc * r + c)
    }

    /// `∫₀^∞ r^k e^{−t r²} dr = Γ((k+1)/2) / (2 t^{(k+1)/2})`, summed.
    fn closed_trace(&self, t: f64) -> f64 {
        let moments: f64 = self
            .polynomial
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(k, &c)| c * moment(k) * t.powf(-((k + 1) as f64) / 2.0))
            .sum();
        self.scale() * (-t * self.shift).exp() * moments
    }
}

fn moment(k: usize) -> f64 {
    gamma((k + 1) as f64 / 2.0) / 2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlancherelRow {
    pub p: usize,
    pub note: String,
    pub branches: Vec<Branch>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlancherelTable {
    pub version: u32,
    pub m: usize,
    pub rows: Vec<PlancherelRow>,
}

/// Outcome of the structural checks run when a table is loaded.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TableChecks {
    /// Largest `|K_p − K_{m−p}| / K_p` on the grid.
    pub duality: f64,
    /// Largest relative deviation of `K_p(10⁻⁴)` from `C(m,p) (4πt)^{−m/2}`.
    pub leading_term: f64,
    /// Largest `|Σ (−1)^p K_p| / Σ K_p` on the grid.
    pub euler_density: f64,
}

const CHECK_GRID: [f64; 7] = [1e-4, 1e-3, 1e-2, 0.1, 1.0, 3.0, 10.0];

impl PlancherelTable {
    /// Parses and validates a table; rejects it unless every structural
    /// invariant holds.
    pub fn from_json(text: &str) -> Result<Self> {
        let table: PlancherelTable = serde_json::from_str(text)?;
        table.validate()?;
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn h3() -> Self {
        Self::from_json(H3_TABLE_JSON).expect("shipped table is valid")
    }

    fn validate(&self) -> Result<()> {
        if self.m % 2 == 0 {
            return Err(Error::invalid(format!("Plancherel tables are for odd m, got {}", self.m)));
        }
        if self.rows.len() != self.m + 1 || self.rows.iter().enumerate().any(|(p, r)| r.p != p) {
            return Err(Error::invalid(format!("need rows for p = 0..={} in order", self.m)));
        }
        for row in &self.rows {
            if row.branches.is_empty() {
                return Err(Error::invalid(format!("row {} has no branches", row.p)));
            }
            for b in &row.branches {
                if !(b.shift >= 0.0 && b.shift.is_finite()) {
                    return Err(Error::invalid(format!("row {}: shift must be nonnegative", row.p)));
                }
                if b.polynomial.iter().any(|&c| !(c >= 0.0 && c.is_finite())) || b.polynomial.iter().all(|&c| c == 0.0)
                {
                    return Err(Error::invalid(format!(
                        "row {}: density coefficients must be nonnegative and not all zero",
                        row.p
                    )));
                }
                if b.polynomial.iter().enumerate().any(|(k, &c)| c != 0.0 && k + 1 > self.m) {
                    return Err(Error::invalid(format!(
                        "row {}: density grows faster than r^(m-1); the small-time expansion would not close",
                        row.p
                    )));
                }
            }
        }
        let c = self.checks();
        if c.duality > 1e-10 {
            return Err(Error::invalid(format!("duality K_p = K_(m-p) fails by {:e}", c.duality)));
        }
        if c.leading_term > 1e-3 {
            return Err(Error::invalid(format!("leading small-time term off by {:e}", c.leading_term)));
        }
        if c.euler_density > 1e-9 {
            return Err(Error::invalid(format!("alternating sum of densities is {:e}, not 0", c.euler_density)));
        }
        Ok(())
    }

    /// Evaluates the structural invariants with the closed-form densities.
    pub fn checks(&self) -> TableChecks {
        let m = self.m;
        let mut duality: f64 = 0.0;
        let mut euler: f64 = 0.0;
        for &t in &CHECK_GRID {
            let k: Vec<f64> = (0..=m).map(|p| self.closed_density(p, t)).collect();
            for p in 0..=m {
                duality = duality.max((k[p] - k[m - p]).abs() / k[p]);
            }
            let alt: f64 = k.iter().enumerate().map(|(p, v)| if p % 2 == 0 { *v } else { -v }).sum();
            euler = euler.max(alt.abs() / k.iter().sum::<f64>());
        }
        let t = 1e-4;
        let leading = (0..=m)
            .map(|p| {
                let expect = binomial(m, p) * (4.0 * PI * t).powf(-(m as f64) / 2.0);
                (self.closed_density(p, t) / expect - 1.0).abs()
            })
            .fold(0.0, f64::max);
        TableChecks { duality, leading_term: leading, euler_density: euler }
    }

    fn row(&self, p: usize) -> Result<&PlancherelRow> {
        self.rows.get(p).ok_or_else(|| Error::invalid(format!("no Plancherel row for p = {p} (m = {})", self.m)))
    }

    /// `K_p(t)` from the Gaussian moments of the polynomial densities.
    pub fn closed_density(&self, p: usize, t: f64) -> f64 {
        self.rows[p].branches.iter().map(|b| b.closed_trace(t)).sum()
    }

    /// `K_p(t) = ∫₀^∞ e^{−t(r² + σ)} μ(r) dr` by quadrature.
    pub fn heat_density(&self, p: usize, t: f64) -> Result<f64> {
        self.heat_density_with(p, t, 1e-10)
    }

    pub fn heat_density_with(&self, p: usize, t: f64, rel_tol: f64) -> Result<f64> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::invalid(format!("heat density needs t > 0, got {t}")));
        }
        let row = self.row(p)?;
        let q = Quadrature { abs_tol: 0.0, rel_tol, max_subdivisions: 2000 };
        let s = t.sqrt();
        let mut total = 0.0;
        for b in &row.branches {
            // r = u/√t puts the Gaussian at unit scale.
            let est = q.integrate_to_infinity(|u| (-u * u).exp() * b.density(u / s), 0.0)?;
            total += (-t * b.shift).exp() * est.value / s;
        }
        Ok(total)
    }

    /// Small-time coefficients of `K_p` in the slots `t^{−(m−i)/2}`,
    /// `i = 0..=m`, from the power series of `e^{−tσ}`.
    pub fn coefficients(&self, p: usize) -> Vec<f64> {
        let m = self.m;
        let mut c = vec![0.0; m + 1];
        for b in &self.rows[p].branches {
            for (k, &ck) in b.polynomial.iter().enumerate() {
                if ck == 0.0 {
                    continue;
                }
                // t^{−(k+1)/2 + j} lands in slot i = m − (k+1) + 2j.
                let base = b.scale() * ck * moment(k);
                let mut j = 0usize;
                let mut fact = 1.0;
                while m + 2 * j >= k + 1 && m + 2 * j - (k + 1) <= m {
                    let i = m + 2 * j - (k + 1);
                    c[i] += base * (-b.shift).powi(j as i32) / fact;
                    j += 1;
                    fact *= j as f64;
                }
            }
        }
        c
    }

    /// `K_p(t) − Σ c_i t^{−(m−i)/2}`, without cancellation.
    pub fn remainder(&self, p: usize, t: f64) -> f64 {
        let mut total = 0.0;
        for b in &self.rows[p].branches {
            for (k, &ck) in b.polynomial.iter().enumerate() {
                if ck == 0.0 {
                    continue;
                }
                let a = (k + 1) as f64 / 2.0;
                // Exponents −a + j ≤ 0 sit in the expansion; the rest of the
                // series of e^{−tσ} is the remainder.
                let kept = a.floor() as i32 + 1;
                let tail = exp_tail(t * b.shift, kept);
                total += b.scale() * ck * moment(k) * t.powf(-a) * tail;
            }
        }
        total
    }

    /// Decay certificate of `K_p` for `t ≥ 1`.
    pub fn decay(&self, p: usize) -> Decay {
        let row = &self.rows[p];
        let at_one = self.closed_density(p, 1.0);
        let min_shift = row.branches.iter().map(|b| b.shift).fold(f64::INFINITY, f64::min);
        if min_shift > 0.0 {
            return Decay::Exponential { rate: min_shift, at_one };
        }
        // Each term e^{−tσ} t^{−(k+1)/2} is at most its t = 1 value times t^{−β}.
        let exponent = row
            .branches
            .iter()
            .filter(|b| b.shift == 0.0)
            .flat_map(|b| b.polynomial.iter().enumerate().filter(|(_, &c)| c != 0.0).map(|(k, _)| (k + 1) as f64 / 2.0))
            .fold(f64::INFINITY, f64::min);
        Decay::PowerLaw { exponent: exponent.min(0.5), constant: at_one }
    }
}

/// `e^{−x} − Σ_{j<n} (−x)^j / j!`.
fn exp_tail(x: f64, n: i32) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if x.abs() > 0.5 {
        let mut partial = 0.0;
        let mut term = 1.0;
        for j in 0..n {
            partial += term;
            term *= -x / (j + 1) as f64;
        }
        return (-x).exp() - partial;
    }
    let mut term: f64 = 1.0;
    for j in 0..n {
        term *= -x / (j + 1) as f64;
    }
    let mut sum: f64 = 0.0;
    let mut j = n;
    while term.abs() > 1e-18 * sum.abs() || sum == 0.0 {
        sum += term;
        j += 1;
        term *= -x / j as f64;
        if term == 0.0 {
            break;
        }
    }
    sum
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `K_p` as a heat trace in dimension `m`.
#[derive(Debug, Clone)]
pub struct DensityTrace<'a> {
    table: &'a PlancherelTable,
    p: usize,
    rel_tol: f64,
}

impl<'a> DensityTrace<'a> {
    pub fn new(table: &'a PlancherelTable, p: usize, rel_tol: f64) -> Result<Self> {
        table.row(p)?;
        Ok(Self { table, p, rel_tol })
    }
}

impl HeatTrace for DensityTrace<'_> {
    fn trace(&self, t: f64) -> f64 {
        self.table.heat_density_with(self.p, t, self.rel_tol).unwrap_or(f64::NAN)
    }

    fn dimension(&self) -> usize {
        self.table.m
    }

    fn coefficients(&self) -> Option<Vec<f64>> {
        Some(self.table.coefficients(self.p))
    }

    fn remainder(&self, t: f64) -> Option<f64> {
        Some(self.table.remainder(self.p, t))
    }

    fn decay(&self) -> Decay {
        self.table.decay(self.p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn scalar_density_closed_form() {
        let t3 = PlancherelTable::h3();
        for t in [1e-3f64, 0.1, 1.0, 5.0] {
            let expect = (-t).exp() / (4.0 * PI * t).powf(1.5);
            assert_relative_eq!(t3.heat_density(0, t).unwrap(), expect, max_relative = 1e-9);
            assert_relative_eq!(t3.closed_density(0, t), expect, max_relative = 1e-13);
            assert_eq!(t3.heat_density(3, t).unwrap(), t3.heat_density(0, t).unwrap());
        }
    }

    #[test]
    fn one_form_leading_term() {
        let t3 = PlancherelTable::h3();
        let t = 1e-4;
        let lead = 3.0 / (4.0 * PI * t).powf(1.5);
        assert_relative_eq!(t3.heat_density(1, t).unwrap(), lead, max_relative = 1e-3);
    }

    #[test]
    fn shipped_table_invariants() {
        let c = PlancherelTable::h3().checks();
        assert!(c.duality <= 1e-10 && c.leading_term <= 1e-3 && c.euler_density <= 1e-9, "{c:?}");
    }

    #[test]
    fn remainder_matches_direct_subtraction() {
        let t3 = PlancherelTable::h3();
        for p in 0..=3 {
            let c = t3.coefficients(p);
            for t in [0.05, 0.3, 1.0] {
                let direct = t3.closed_density(p, t) - crate::zeta::expansion(&c, 3, t);
                assert_relative_eq!(t3.remainder(p, t), direct, epsilon = 1e-12);
            }
            // O(t^{1/2}) near zero.
            assert!(t3.remainder(p, 1e-8).abs() < 1e-3);
        }
    }

    #[test]
    fn scalar_coefficients() {
        let c = PlancherelTable::h3().coefficients(0);
        let a = (4.0 * PI).powf(-1.5);
        assert_relative_eq!(c[0], a, max_relative = 1e-14);
        assert_eq!(c[1], 0.0);
        assert_relative_eq!(c[2], -a, max_relative = 1e-14);
        assert_eq!(c[3], 0.0);
    }

    #[test]
    fn broken_tables_rejected() {
        let mut t: PlancherelTable = serde_json::from_str(H3_TABLE_JSON).unwrap();
        t.rows[3].branches[0].polynomial = vec![0.0, 0.0, 0.6];
        assert!(PlancherelTable::from_json(&serde_json::to_string(&t).unwrap()).is_err());
        let mut t: PlancherelTable = serde_json::from_str(H3_TABLE_JSON).unwrap();
        t.rows.pop();
        assert!(PlancherelTable::from_json(&serde_json::to_string(&t).unwrap()).is_err());
    }

    #[test]
    fn exp_tail_small_and_large() {
        for x in [1e-6, 0.1, 0.4, 0.7, 3.0] {
            for n in 0..4 {
                let direct = (-x as f64).exp() - (0..n).map(|j| (-x as f64).powi(j) / (1..=j).product::<i32>().max(1) as f64).sum::<f64>();
                assert_relative_eq!(exp_tail(x, n), direct, max_relative = 1e-6, epsilon = 1e-16);
            }
        }
    }
}
