use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Finite spectrum of a nonnegative operator: `(eigenvalue, weight)` pairs
/// where the weight is multiplicity times trace normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct Spectrum {
    entries: Vec<(f64, f64)>,
}

impl Spectrum {
    /// Validates and sorts the entries; equal eigenvalues are merged.
    pub fn new(mut entries: Vec<(f64, f64)>) -> Result<Self> {
        for &(l, w) in &entries {
            if !(l.is_finite() && l >= 0.0) {
                return Err(Error::invalid(format!("eigenvalue {l} must be finite and nonnegative")));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::invalid(format!("weight {w} must be finite and positive")));
            }
        }
        entries.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(entries.len());
        for (l, w) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == l => last.1 += w,
                _ => merged.push((l, w)),
            }
        }
        Ok(Self { entries: merged })
    }

    pub fn empty() -> Self {
        Self { entries: Vec::new() }
    }

    /// Eigenvalues `(2πn/L)²`, `n ∈ ℤ`, `|n| ≤ n_max`, of the circle of length `L`.
    pub fn circle(length: f64, n_max: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::invalid("circumference must be positive"));
        }
        let k = 2.0 * std::f64::consts::PI / length;
        let mut entries = vec![(0.0, 1.0)];
        entries.extend((1..=n_max).map(|n| ((k * n as f64).powi(2), 2.0)));
        Self::new(entries)
    }

    pub fn entries(&self) -> &[(f64, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn kernel_weight(&self) -> f64 {
        self.entries.iter().filter(|e| e.0 == 0.0).map(|e| e.1).sum()
    }

    /// Entries with positive eigenvalue.
    pub fn positive(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.entries.iter().copied().filter(|e| e.0 > 0.0)
    }

    /// Total weight of the positive part.
    pub fn perp_weight(&self) -> f64 {
        self.positive().map(|e| e.1).sum()
    }

    /// Smallest positive eigenvalue.
    pub fn gap(&self) -> Option<f64> {
        self.positive().next().map(|e| e.0)
    }

    /// `Σ w e^{−tλ}`; with `perp` the zero modes are dropped.
    pub fn heat_trace(&self, t: f64, perp: bool) -> Result<f64> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::invalid(format!("heat trace needs t > 0, got {t}")));
        }
        Ok(self.trace_unchecked(t, perp))
    }

    pub(crate) fn trace_unchecked(&self, t: f64, perp: bool) -> f64 {
        self.entries
            .iter()
            .filter(|e| !perp || e.0 > 0.0)
            .map(|&(l, w)| w * (-t * l).exp())
            .sum()
    }

    /// Disjoint union (direct sum of operators).
    pub fn union(&self, other: &Self) -> Self {
        let mut e = self.entries.clone();
        e.extend_from_slice(&other.entries);
        Self::new(e).expect("both inputs already valid")
    }

    /// Multiplies every weight by `c > 0`.
    pub fn scale_weights(&self, c: f64) -> Result<Self> {
        Self::new(self.entries.iter().map(|&(l, w)| (l, w * c)).collect())
    }

    /// Counting function `F(λ) = Σ_{0 < λ_j ≤ λ} w_j`.
    pub fn counting(&self, lambda: f64) -> f64 {
        self.positive().take_while(|e| e.0 <= lambda).map(|e| e.1).sum()
    }
}

impl TryFrom<Vec<(f64, f64)>> for Spectrum {
    type Error = Error;

    fn try_from(v: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Spectrum> for Vec<(f64, f64)> {
    fn from(s: Spectrum) -> Self {
        s.entries
    }
}
