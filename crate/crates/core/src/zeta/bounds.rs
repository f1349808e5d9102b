//! Large-time domination: the bound of `t^{−1} θ^⊥(t)` by the spectral
//! density near zero plus a remainder decaying like `e^{−tε}/t`, and the
//! finiteness test for dominating functions `G`.

use serde::Serialize;

use super::spectrum::Spectrum;
use crate::error::{Error, Result};
use crate::quadrature::Quadrature;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EwProbe {
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EwReport {
    pub probes: usize,
    pub violations: Vec<EwProbe>,
    /// Smallest `rhs − lhs` seen.
    pub min_margin: f64,
}

/// Right side of the bound at `t`:
/// `∫₀^ε e^{−tλ} F(λ) dλ + e^{−tε} F(ε)/t + e^{−tε} e^{ε} θ^⊥(1)/t`,
/// with the integral evaluated exactly for the step function `F`.
pub fn ew_rhs(s: &Spectrum, eps: f64, t: f64) -> f64 {
    let decay = (-t * eps).exp();
    let integral: f64 =
        s.positive().take_while(|e| e.0 <= eps).map(|(l, w)| w * ((-t * l).exp() - decay) / t).sum();
    integral + decay * s.counting(eps) / t + decay * eps.exp() * s.trace_unchecked(1.0, true) / t
}

/// Checks `t^{−1} θ^⊥(t) ≤ ew_rhs` on `ts` (all `≥ 1`).
pub fn check_ew(s: &Spectrum, eps: f64, ts: &[f64]) -> Result<EwReport> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid("ε must be positive"));
    }
    if let Some(t) = ts.iter().find(|&&t| !(t >= 1.0 && t.is_finite())) {
        return Err(Error::invalid(format!("probe time {t} must be ≥ 1")));
    }
    let mut violations = Vec::new();
    let mut min_margin = f64::INFINITY;
    for &t in ts {
        let lhs = s.trace_unchecked(t, true) / t;
        let rhs = ew_rhs(s, eps, t);
        let margin = rhs - lhs;
        min_margin = min_margin.min(margin);
        if margin < -1e-12 * rhs.abs().max(1e-300) {
            violations.push(EwProbe { t, lhs, rhs });
        }
    }
    Ok(EwReport { probes: ts.len(), violations, min_margin })
}

/// `∫₁^∞ ∫₀^ε e^{−tλ} G(λ) dλ dt` for `G(λ) = Σ_k λ^{β_k}`, by nested
/// quadrature and in closed form `Σ_k γ(β_k, ε)` (lower incomplete gamma).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GoalIntegral {
    pub quadrature: f64,
    pub error_estimate: f64,
    pub closed_form: f64,
    /// All exponents positive: the double integral is finite.
    pub finite: bool,
}

pub fn goal_double_integral(exponents: &[f64], eps: f64) -> Result<GoalIntegral> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid("ε must be positive"));
    }
    if exponents.is_empty() {
        return Err(Error::invalid("G needs at least one power"));
    }
    let finite = exponents.iter().all(|&b| b > 0.0 && b.is_finite());
    if !finite {
        return Ok(GoalIntegral { quadrature: f64::INFINITY, error_estimate: 0.0, closed_form: f64::INFINITY, finite });
    }
    let closed_form = exponents.iter().map(|&b| statrs::function::gamma::gamma_li(b, eps)).sum();
    let q = Quadrature { abs_tol: 1e-12, rel_tol: 1e-12, max_subdivisions: 4000 };
    // λ = ε v⁴ smooths the inner integrand at 0; t = w^{−4} maps [1, ∞)
    // onto (0, 1] with a bounded integrand, since the inner integral decays
    // like t^{−1−min β}.
    let inner = |t: f64| -> f64 {
        let f = |v: f64| {
            let l = eps * v.powi(4);
            let g: f64 = exponents.iter().map(|&b| l.powf(b)).sum();
            (-t * l).exp() * g * 4.0 * eps * v.powi(3)
        };
        // The mass sits near λ ~ 1/t, i.e. v ~ (tε)^{−1/4}.
        let peak = (t * eps).powf(-0.25);
        let mut cuts = vec![0.0];
        cuts.extend([peak, 4.0 * peak].into_iter().filter(|&c| c < 1.0));
        cuts.push(1.0);
        cuts.windows(2)
            .map(|w| q.integrate(f, w[0], w[1]).map(|e| e.value).unwrap_or(f64::NAN))
            .sum()
    };
    let outer = q.integrate(
        |w| {
            if w == 0.0 {
                return 0.0;
            }
            let t = w.powi(-4);
            inner(t) * 4.0 * w.powi(-5)
        },
        0.0,
        1.0,
    )?;
    Ok(GoalIntegral { quadrature: outer.value, error_estimate: outer.error, closed_form, finite })
}
