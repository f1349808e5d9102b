use serde::Serialize;

use crate::error::{Error, Result};

/// Right-continuous nondecreasing step function `λ ↦ F(λ)` on `[0, ∞)`.
///
/// Stored as sorted breakpoints `(λ_k, v_k)`: `F(λ) = v_k` for
/// `λ_k ≤ λ < λ_{k+1}` and `F(λ) = 0` left of the first breakpoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralDensity {
    breakpoints: Vec<(f64, f64)>,
}

impl SpectralDensity {
    pub fn zero() -> Self {
        Self { breakpoints: Vec::new() }
    }

    /// Counting function of `levels` (nonnegative, any order), each level
    /// carrying weight `normalization`.
    pub fn from_levels(levels: &[f64], normalization: f64) -> Self {
        let mut sorted: Vec<f64> = levels.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut breakpoints: Vec<(f64, f64)> = Vec::new();
        for (k, &l) in sorted.iter().enumerate() {
            let value = normalization * (k + 1) as f64;
            match breakpoints.last_mut() {
                Some(last) if last.0 == l => last.1 = value,
                _ => breakpoints.push((l, value)),
            }
        }
        Self { breakpoints }
    }

    /// Builds a step function from explicit breakpoints.
    pub fn from_breakpoints(breakpoints: Vec<(f64, f64)>) -> Result<Self> {
        for (k, &(l, v)) in breakpoints.iter().enumerate() {
            if !(l.is_finite() && v.is_finite()) {
                return Err(Error::NonFinite(format!("breakpoint {k}")));
            }
            if l < 0.0 || v < 0.0 {
                return Err(Error::invalid(format!("breakpoint {k} must be nonnegative")));
            }
            if k > 0 {
                let (pl, pv) = breakpoints[k - 1];
                if l <= pl {
                    return Err(Error::invalid("breakpoint positions must be strictly increasing"));
                }
                if v < pv {
                    return Err(Error::invalid("breakpoint values must be nondecreasing"));
                }
            }
        }
        Ok(Self { breakpoints })
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        let k = self.breakpoints.partition_point(|&(l, _)| l <= lambda);
        if k == 0 {
            0.0
        } else {
            self.breakpoints[k - 1].1
        }
    }

    pub fn at_zero(&self) -> f64 {
        self.eval(0.0)
    }

    /// Limit value for large `λ`.
    pub fn total(&self) -> f64 {
        self.breakpoints.last().map_or(0.0, |b| b.1)
    }

    /// `F̄(λ) = F(λ) − F(0)`.
    pub fn reduced(&self) -> Self {
        let base = self.at_zero();
        let breakpoints = self
            .breakpoints
            .iter()
            .filter(|&&(l, _)| l > 0.0)
            .map(|&(l, v)| (l, v - base))
            .collect();
        Self { breakpoints }
    }

    /// Pointwise sum.
    pub fn sum(&self, other: &Self) -> Self {
        let mut at: Vec<f64> = self
            .breakpoints
            .iter()
            .chain(&other.breakpoints)
            .map(|b| b.0)
            .collect();
        at.sort_by(f64::total_cmp);
        at.dedup();
        Self {
            breakpoints: at.into_iter().map(|l| (l, self.eval(l) + other.eval(l))).collect(),
        }
    }

    /// Least-squares power-law exponent of `F̄` on `(0, ε]`.
    pub fn exponent_fit(&self, epsilon: f64) -> Result<ExponentFit> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::invalid("epsilon must be positive and finite"));
        }
        let reduced = self.reduced();
        let pts: Vec<(f64, f64)> = reduced
            .breakpoints
            .iter()
            .copied()
            .filter(|&(l, v)| l <= epsilon && v > 0.0)
            .collect();
        if pts.is_empty() {
            return Ok(ExponentFit {
                alpha: f64::INFINITY,
                constant: 0.0,
                residual: 0.0,
                points: 0,
                certifying: true,
            });
        }
        if pts.len() < 3 {
            return Err(Error::InsufficientData(format!(
                "{} breakpoints in (0, {epsilon}], need at least 3",
                pts.len()
            )));
        }
        let n = pts.len() as f64;
        let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let alpha = sxy / sxx;
        let intercept = my - alpha * mx;
        let residual = (xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (y - intercept - alpha * x).powi(2))
            .sum::<f64>()
            / n)
            .sqrt();
        // Smallest C with F̄(λ_k) ≤ C λ_k^α at every breakpoint.
        let constant = pts
            .iter()
            .map(|&(l, v)| v / l.powf(alpha))
            .fold(0.0, f64::max);
        Ok(ExponentFit {
            alpha,
            constant,
            residual,
            points: pts.len(),
            certifying: alpha > NS_CERTIFY_FLOOR,
        })
    }
}

const NS_CERTIFY_FLOOR: f64 = 0.05;

/// Power-law fit `F̄(λ) ≈ C λ^α` near zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentFit {
    /// `+∞` when there is no spectrum in `(0, ε]`.
    pub alpha: f64,
    pub constant: f64,
    /// RMS residual of the log-log fit.
    pub residual: f64,
    pub points: usize,
    /// Whether the fitted exponent is bounded away from zero.
    pub certifying: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn diagonal_zero_two() {
        let f = SpectralDensity::from_levels(&[0.0, 2.0], 1.0);
        assert_eq!(f.eval(0.0), 1.0);
        assert_eq!(f.eval(1.999), 1.0);
        assert_eq!(f.eval(2.0), 2.0);
        let r = f.reduced();
        assert_eq!(r.eval(1.5), 0.0);
        assert_eq!(r.eval(2.0), 1.0);
        assert_eq!(r.at_zero(), 0.0);
    }

    #[test]
    fn repeated_levels_merge() {
        let f = SpectralDensity::from_levels(&[1.0, 1.0, 1.0], 0.5);
        assert_eq!(f.breakpoints(), &[(1.0, 1.5)]);
        assert_eq!(f.eval(0.99), 0.0);
    }

    #[test]
    fn sum_adds_pointwise() {
        let a = SpectralDensity::from_levels(&[1.0], 1.0);
        let b = SpectralDensity::from_levels(&[0.5, 1.0], 1.0);
        let s = a.sum(&b);
        assert_eq!(s.eval(0.7), 1.0);
        assert_eq!(s.eval(1.0), 3.0);
    }

    #[test]
    fn rejects_decreasing_values() {
        assert!(SpectralDensity::from_breakpoints(vec![(1.0, 2.0), (2.0, 1.0)]).is_err());
        assert!(SpectralDensity::from_breakpoints(vec![(1.0, 1.0), (1.0, 2.0)]).is_err());
    }

    #[test]
    fn fit_recovers_square_root_law() {
        let bps: Vec<(f64, f64)> = (1..=40)
            .map(|k| {
                let l = 1e-6 * 1.4f64.powi(k);
                (l, l.sqrt())
            })
            .collect();
        let f = SpectralDensity::from_breakpoints(bps).unwrap();
        let fit = f.exponent_fit(1e-1).unwrap();
        assert!((fit.alpha - 0.5).abs() < 0.05, "{fit:?}");
        assert!(fit.certifying);
    }

    #[test]
    fn fit_with_gap_is_infinite() {
        let f = SpectralDensity::from_levels(&[0.0, 0.0, 3.0], 1.0);
        let fit = f.exponent_fit(1.0).unwrap();
        assert!(fit.alpha.is_infinite());
    }

    #[test]
    fn flat_density_is_not_certifying() {
        let f = SpectralDensity::from_breakpoints(vec![(1e-3, 1.0), (1e-2, 1.0), (1e-1, 1.0)]).unwrap();
        let fit = f.exponent_fit(1.0).unwrap();
        assert!(fit.alpha.abs() < 1e-12);
        assert!(!fit.certifying);
    }

    #[test]
    fn too_few_points() {
        let f = SpectralDensity::from_levels(&[0.1, 0.2], 1.0);
        assert!(matches!(f.exponent_fit(1.0), Err(Error::InsufficientData(_))));
    }

    proptest! {
        #[test]
        fn counting_function_is_monotone(levels in proptest::collection::vec(0.0f64..10.0, 0..12),
                                         probes in proptest::collection::vec(0.0f64..12.0, 2..20)) {
            let f = SpectralDensity::from_levels(&levels, 1.0);
            let mut p = probes.clone();
            p.sort_by(f64::total_cmp);
            for w in p.windows(2) {
                prop_assert!(f.eval(w[0]) <= f.eval(w[1]));
            }
            prop_assert_eq!(f.eval(10.0), levels.len() as f64);
            prop_assert_eq!(f.total(), levels.len() as f64);
        }
    }
}
