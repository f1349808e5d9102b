use rayon::prelude::*;
use serde::Serialize;

use super::cim::c_im;
use super::spectrum::Spectrum;
use super::trace::{Decay, HeatTrace, SpectrumTrace};
use crate::error::{Error, Result};
use crate::quadrature::Quadrature;
use crate::sdf::linalg;

/// A number with an absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Value {
    pub value: f64,
    pub error_estimate: f64,
}

/// Tail mass left out of the large-time integral.
const TAIL_TOL: f64 = 1e-13;

fn quadrature() -> Quadrature {
    Quadrature { abs_tol: 1e-11, rel_tol: 1e-11, max_subdivisions: 4000 }
}

/// `∫₀¹ (θ^⊥(t) − Σ c_i t^{−(m−i)/2}) dt/t + Σ c(i, m) c_i`.
pub fn d_small(h: &dyn HeatTrace) -> Result<Value> {
    let m = h.dimension();
    let coeffs = h.coefficients().ok_or_else(|| {
        Error::InsufficientData("small-time coefficients are unknown; fit them explicitly first".into())
    })?;
    if coeffs.len() != m + 1 {
        return Err(Error::invalid(format!("expected {} coefficients, got {}", m + 1, coeffs.len())));
    }
    let rem = |t: f64| h.remainder(t).expect("coefficients are known");
    check_subtracted(&rem, &coeffs)?;
    // t = v² keeps the integrand bounded when the remainder is O(t^{1/2}).
    let est = quadrature().integrate(|v| if v == 0.0 { 0.0 } else { 2.0 * rem(v * v) / v }, 0.0, 1.0)?;
    let constant: f64 = coeffs.iter().enumerate().map(|(i, &c)| c * c_im(i, m)).sum();
    Ok(Value { value: est.value + constant, error_estimate: est.error })
}

/// Rejects remainders that do not tend to zero as `t → 0`.
fn check_subtracted(rem: &dyn Fn(f64) -> f64, coeffs: &[f64]) -> Result<()> {
    let (r4, r8) = (rem(1e-4), rem(1e-8));
    if !(r4.is_finite() && r8.is_finite()) {
        return Err(Error::NonFinite("subtracted heat trace near t = 0".into()));
    }
    let scale = coeffs.iter().map(|c| c.abs()).sum::<f64>().max(1.0);
    if r8.abs() > 0.1 * r4.abs() + 1e-9 * scale {
        return Err(Error::precondition(format!(
            "subtracted heat trace is not o(1) as t → 0 (remainder {r4:e} at 1e-4, {r8:e} at 1e-8); \
             the integrand is not integrable"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DeterminantClass {
    Yes,
    No,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LargeTime {
    /// `∫₁^∞ θ^⊥(t) dt/t`; absent unless the class is `Yes`.
    pub value: Option<f64>,
    pub error_estimate: f64,
    /// Certified bound on `∫_T^∞ θ^⊥ dt/t` for the cutoff `T` used.
    pub tail_bound: f64,
    pub cutoff: f64,
    pub determinant_class: DeterminantClass,
}

impl LargeTime {
    fn without_value(class: DeterminantClass) -> Self {
        Self {
            value: None,
            error_estimate: f64::NAN,
            tail_bound: f64::INFINITY,
            cutoff: f64::NAN,
            determinant_class: class,
        }
    }
}

/// Bound on `∫_x^∞ θ dt/t` under `decay`.
pub fn tail_bound(decay: Decay, x: f64) -> f64 {
    match decay {
        Decay::Vanishing => 0.0,
        Decay::Exponential { rate, at_one } => at_one * (-rate * (x - 1.0)).exp() / (rate * x),
        Decay::PowerLaw { exponent, constant } => constant * x.powf(-exponent) / exponent,
        Decay::Unknown => f64::INFINITY,
    }
}

/// `∫₁^∞ θ^⊥(t) dt/t` with a tail certificate.
pub fn large_time_integral(h: &dyn HeatTrace) -> Result<LargeTime> {
    let decay = h.decay();
    let cutoff = match decay {
        Decay::Vanishing => {
            return Ok(LargeTime {
                value: Some(0.0),
                error_estimate: 0.0,
                tail_bound: 0.0,
                cutoff: 1.0,
                determinant_class: DeterminantClass::Yes,
            })
        }
        Decay::Exponential { rate, at_one } if rate > 0.0 && at_one >= 0.0 => {
            1.0 + ((at_one / (rate * TAIL_TOL)).ln() / rate).max(0.0)
        }
        Decay::PowerLaw { exponent, constant } if exponent > 0.0 && constant >= 0.0 => {
            (constant / (exponent * TAIL_TOL)).powf(1.0 / exponent).max(1.0)
        }
        _ => {
            let class = if looks_divergent(h) { DeterminantClass::No } else { DeterminantClass::Unknown };
            return Ok(LargeTime::without_value(class));
        }
    };
    // t = e^x turns dt/t into dx.
    let est = quadrature().integrate(|x| h.trace(x.exp()), 0.0, cutoff.ln())?;
    let tail = tail_bound(decay, cutoff);
    Ok(LargeTime {
        value: Some(est.value),
        error_estimate: est.error + tail,
        tail_bound: tail,
        cutoff,
        determinant_class: DeterminantClass::Yes,
    })
}

/// Comparison with `1/ln t`: if `θ(t) ln t` does not decrease along a
/// geometric grid, `∫ θ dt/t` diverges like `∫ dt/(t ln t)`.
fn looks_divergent(h: &dyn HeatTrace) -> bool {
    let samples: Vec<f64> = (2..=16).map(|k| 10f64.powi(k)).map(|t| h.trace(t) * t.ln()).collect();
    samples[0] > 0.0 && samples.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12))
}

/// `ζ'(0) = d_small + ∫₁^∞ θ^⊥ dt/t`.
pub fn zeta_prime(h: &dyn HeatTrace) -> Result<Value> {
    let small = d_small(h)?;
    let large = large_time_integral(h)?;
    let Some(lv) = large.value else {
        return Err(Error::precondition(format!(
            "large-time integral unavailable (determinant class {:?})",
            large.determinant_class
        )));
    };
    Ok(Value { value: small.value + lv, error_estimate: small.error_estimate + large.error_estimate })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ZetaDet {
    /// `det' = exp(−ζ'(0))`.
    pub value: f64,
    pub error_estimate: f64,
    pub zeta_prime: f64,
}

/// Zeta-regularized determinant of the operator behind `h`.
pub fn zeta_det(h: &dyn HeatTrace) -> Result<ZetaDet> {
    let zp = zeta_prime(h)?;
    let value = (-zp.value).exp();
    Ok(ZetaDet { value, error_estimate: value * zp.error_estimate, zeta_prime: zp.value })
}

/// Zeta-regularized determinant of a finite spectrum (zero modes excluded).
pub fn zeta_det_spectrum(s: &Spectrum) -> Result<ZetaDet> {
    if s.gap().is_none() {
        return Err(Error::precondition("spectrum has no positive eigenvalue"));
    }
    zeta_det(&SpectrumTrace::new(s.clone(), 0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DegreeTorsion {
    pub p: usize,
    pub small_part: f64,
    pub large_part: f64,
    pub error_estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TorsionResult {
    pub per_degree: Vec<DegreeTorsion>,
    pub total: f64,
    pub error_estimate: f64,
}

/// `Σ_p (−1)^p p (d_small_p + ∫₁^∞ θ_p^⊥ dt/t)`; entry `p` of `degrees`
/// is the trace in degree `p`.
pub fn analytic_torsion(degrees: &[&dyn HeatTrace]) -> Result<TorsionResult> {
    let per_degree = degrees
        .par_iter()
        .enumerate()
        .map(|(p, h)| {
            let small = d_small(*h)?;
            let large = large_time_integral(*h)?;
            let lv = large.value.ok_or_else(|| {
                Error::precondition(format!("degree {p} is not of determinant class ({:?})", large.determinant_class))
            })?;
            Ok(DegreeTorsion {
                p,
                small_part: small.value,
                large_part: lv,
                error_estimate: small.error_estimate + large.error_estimate,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let weight = |p: usize| if p % 2 == 0 { p as f64 } else { -(p as f64) };
    let total = per_degree.iter().map(|d| weight(d.p) * (d.small_part + d.large_part)).sum();
    let error_estimate = per_degree.iter().map(|d| d.p as f64 * d.error_estimate).sum();
    Ok(TorsionResult { per_degree, total, error_estimate })
}

/// `(ln 2)/2 · χ(∂N)`.
pub fn cheeger_mueller_correction(chi_boundary: i64) -> f64 {
    std::f64::consts::LN_2 / 2.0 * chi_boundary as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AsymptoticFit {
    /// Estimates of `c_0, …, c_m`.
    pub coefficients: Vec<f64>,
    /// Condition number of the scaled basis matrix.
    pub condition: f64,
    pub ill_conditioned: bool,
    /// Largest absolute misfit of `t^{m/2} θ(t)` on the grid.
    pub residual: f64,
}

/// Least-squares fit of `θ(t) ≈ Σ c_i t^{−(m−i)/2}` on `grid ⊂ (0, 0.1]`,
/// with rows weighted by `t^{m/2}`.
pub fn asympt_fit(theta: &dyn Fn(f64) -> f64, m: usize, grid: &[f64]) -> Result<AsymptoticFit> {
    if grid.len() < m + 1 {
        return Err(Error::InsufficientData(format!("need at least {} grid points, got {}", m + 1, grid.len())));
    }
    if let Some(t) = grid.iter().find(|&&t| !(t > 0.0 && t <= 0.1)) {
        return Err(Error::invalid(format!("grid point {t} outside (0, 0.1]")));
    }
    let n = grid.len();
    let a = nalgebra::DMatrix::from_fn(n, m + 1, |k, i| grid[k].powf(i as f64 / 2.0));
    let b = nalgebra::DVector::from_fn(n, |k, _| grid[k].powf(m as f64 / 2.0) * theta(grid[k]));
    if b.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("heat trace on the fit grid".into()));
    }
    let d = linalg::decompose(&a);
    let condition = if d.rank < m + 1 { f64::INFINITY } else { d.sigma[0] / d.sigma[m] };
    let c = linalg::pseudo_inverse(&a) * &b;
    let residual = (&a * &c - &b).amax();
    Ok(AsymptoticFit { coefficients: c.iter().copied().collect(), condition, ill_conditioned: condition > 1e8, residual })
}

#[cfg(test)]
mod tests {
    use super::super::cim::EULER_GAMMA;
    use super::super::trace::{CircleTrace, SyntheticTrace};
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    /// `E₁(x) = −γ − ln x − Σ_{k≥1} (−x)^k / (k k!)`.
    fn e1(x: f64) -> f64 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..60 {
            term *= -x / k as f64;
            sum += term / k as f64;
        }
        -EULER_GAMMA - x.ln() - sum
    }

    #[test]
    fn single_eigenvalue_large_time() {
        let s = SpectrumTrace::new(Spectrum::new(vec![(1.0, 1.0)]).unwrap(), 0);
        let lt = large_time_integral(&s).unwrap();
        assert_relative_eq!(lt.value.unwrap(), e1(1.0), epsilon = 1e-11);
        assert_relative_eq!(e1(1.0), 0.219_383_934_395_520_3, epsilon = 1e-15);
        assert_eq!(lt.determinant_class, DeterminantClass::Yes);
    }

    #[test]
    fn kernel_only_spectrum() {
        let s = SpectrumTrace::new(Spectrum::new(vec![(0.0, 5.0)]).unwrap(), 3);
        let lt = large_time_integral(&s).unwrap();
        assert_eq!(lt.value, Some(0.0));
        assert_eq!(lt.determinant_class, DeterminantClass::Yes);
        assert!(zeta_det_spectrum(s.spectrum()).is_err());
    }

    #[test]
    fn logarithmic_decay_is_flagged() {
        let h = SyntheticTrace::new(0, |t| 1.0 / (t + std::f64::consts::E).ln());
        let lt = large_time_integral(&h).unwrap();
        assert_eq!(lt.determinant_class, DeterminantClass::No);
        assert!(lt.value.is_none());
        let h = SyntheticTrace::new(0, |t| (-t).exp());
        assert_eq!(large_time_integral(&h).unwrap().determinant_class, DeterminantClass::Unknown);
    }

    #[test]
    fn single_eigenvalue_determinant() {
        let e = std::f64::consts::E;
        let d = zeta_det_spectrum(&Spectrum::new(vec![(e, 1.0)]).unwrap()).unwrap();
        assert_relative_eq!(d.value, e, max_relative = 1e-10);
        let d = zeta_det_spectrum(&Spectrum::new(vec![(1.0, 1.0)]).unwrap()).unwrap();
        assert_relative_eq!(d.zeta_prime, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn pure_power_small_part_is_the_constant() {
        for (m, i) in [(2usize, 0usize), (4, 0), (3, 0), (3, 2)] {
            let a = (m - i) as f64 / 2.0;
            let mut c = vec![0.0; m + 1];
            c[i] = 1.0;
            let h = SyntheticTrace::new(m, move |t| t.powf(-a)).with_coefficients(c);
            assert_relative_eq!(d_small(&h).unwrap().value, -1.0 / a, epsilon = 1e-12);
        }
    }

    #[test]
    fn wrong_coefficients_rejected() {
        let h = SyntheticTrace::new(1, |t| t.powf(-0.5) + 3.0).with_coefficients(vec![1.0, 2.0]);
        assert!(matches!(d_small(&h), Err(Error::Precondition(_))));
        let h = SyntheticTrace::new(1, |t| t.powf(-0.5) + 3.0);
        assert!(matches!(d_small(&h), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn circle_determinant() {
        for l in [1.0, 2.0 * PI, 5.0] {
            let d = zeta_det(&CircleTrace::new(l).unwrap()).unwrap();
            assert_relative_eq!(d.value, l * l, epsilon = 1e-8);
        }
    }

    #[test]
    fn torsion_of_single_degree() {
        let zero = SpectrumTrace::new(Spectrum::empty(), 1);
        let one = SpectrumTrace::new(Spectrum::new(vec![(1.0, 1.0)]).unwrap(), 1);
        let r = analytic_torsion(&[&zero, &one]).unwrap();
        let small = d_small(&one).unwrap().value;
        assert_relative_eq!(r.total, -(small + e1(1.0)), epsilon = 1e-12);
        // For a single unit eigenvalue ζ'(0) = 0.
        assert_relative_eq!(r.total, 0.0, epsilon = 1e-10);
        assert_eq!(analytic_torsion(&[&zero, &zero]).unwrap().total, 0.0);
    }

    #[test]
    fn fits() {
        let grid: Vec<f64> = (0..40).map(|k| 1e-4 * 10f64.powf(k as f64 * 3.0 / 39.0)).collect();
        let f = asympt_fit(&|t: f64| t.powf(-0.5) + 3.0, 1, &grid).unwrap();
        assert_relative_eq!(f.coefficients[0], 1.0, epsilon = 1e-10);
        assert_relative_eq!(f.coefficients[1], 3.0, epsilon = 1e-10);
        let c = CircleTrace::new(2.0 * PI).unwrap();
        let f = asympt_fit(&|t| c.full_trace(t), 1, &grid).unwrap();
        assert_relative_eq!(f.coefficients[0], PI.sqrt(), epsilon = 1e-6);
        assert!(f.coefficients[1..].iter().all(|x| x.abs() < 1e-6));
        let f = asympt_fit(&|_| 0.0, 2, &grid).unwrap();
        assert!(f.coefficients.iter().all(|&x| x == 0.0));
        assert!(asympt_fit(&|_| 0.0, 2, &[0.5, 0.05, 0.01]).is_err());
    }

    #[test]
    fn correction_term() {
        assert_eq!(cheeger_mueller_correction(0), 0.0);
        assert_relative_eq!(cheeger_mueller_correction(2), std::f64::consts::LN_2, epsilon = 1e-15);
        assert_relative_eq!(cheeger_mueller_correction(-4), -2.0 * std::f64::consts::LN_2, epsilon = 1e-15);
    }
}
