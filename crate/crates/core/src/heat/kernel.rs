use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One-dimensional model domains with exact image-sum heat kernels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum Domain1D {
    Line,
    HalfLineNeumann,
    HalfLineDirichlet,
    IntervalNeumann { length: f64 },
    Circle { length: f64 },
}

impl Domain1D {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Domain1D::IntervalNeumann { length } | Domain1D::Circle { length } => {
                if length > 0.0 && length.is_finite() {
                    Ok(())
                } else {
                    Err(Error::invalid(format!("domain length must be positive, got {length}")))
                }
            }
            _ => Ok(()),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        if !x.is_finite() {
            return false;
        }
        match *self {
            Domain1D::Line => true,
            Domain1D::HalfLineNeumann | Domain1D::HalfLineDirichlet => x >= 0.0,
            Domain1D::IntervalNeumann { length } | Domain1D::Circle { length } => (0.0..=length).contains(&x),
        }
    }

    /// `(lo, hi)`, with `hi` infinite for unbounded domains.
    pub fn extent(&self) -> (f64, f64) {
        match *self {
            Domain1D::Line => (f64::NEG_INFINITY, f64::INFINITY),
            Domain1D::HalfLineNeumann | Domain1D::HalfLineDirichlet => (0.0, f64::INFINITY),
            Domain1D::IntervalNeumann { length } | Domain1D::Circle { length } => (0.0, length),
        }
    }

    pub fn is_reflecting(&self) -> bool {
        !matches!(self, Domain1D::HalfLineDirichlet)
    }

    pub fn name(&self) -> String {
        match *self {
            Domain1D::Line => "line".into(),
            Domain1D::HalfLineNeumann => "halfLineNeumann".into(),
            Domain1D::HalfLineDirichlet => "halfLineDirichlet".into(),
            Domain1D::IntervalNeumann { length } => format!("intervalNeumann({length})"),
            Domain1D::Circle { length } => format!("circle({length})"),
        }
    }
}

/// `(4πt)^{−1/2} e^{−d²/4t}`.
pub fn gaussian(t: f64, d: f64) -> f64 {
    (-d * d / (4.0 * t)).exp() / (4.0 * PI * t).sqrt()
}

/// `ln G_t(d)`.
pub(crate) fn ln_gaussian(t: f64, d: f64) -> f64 {
    -d * d / (4.0 * t) - 0.5 * (4.0 * PI * t).ln()
}

/// Distance beyond which a single image contributes below `1e−16`.
fn image_radius(t: f64) -> f64 {
    let prefactor = (4.0 * PI * t).sqrt().recip().ln().max(0.0);
    (12.0 * t.sqrt()).max((4.0 * t * (37.0 + prefactor)).sqrt())
}

/// `Σ_n G_t(d + n P)` over the images inside the truncation radius, plus
/// one period of margin.
fn lattice_sum(t: f64, d: f64, period: f64) -> f64 {
    image_range(t, d, period).map(|n| gaussian(t, d + n as f64 * period)).sum()
}

/// Indices `n` of the images `d + nP` kept in lattice sums.
pub(crate) fn image_range(t: f64, d: f64, period: f64) -> std::ops::RangeInclusive<i64> {
    let radius = image_radius(t) + period;
    let lo = ((-radius - d) / period).floor() as i64;
    let hi = ((radius - d) / period).ceil() as i64;
    lo..=hi
}

/// Heat kernel `e^{−tΔ}(x, y)` of `domain` by the method of images.
pub fn kernel_1d(domain: &Domain1D, t: f64, x: f64, y: f64) -> Result<f64> {
    domain.validate()?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("heat kernel needs t > 0, got {t}")));
    }
    for p in [x, y] {
        if !domain.contains(p) {
            return Err(Error::invalid(format!("point {p} is outside {}", domain.name())));
        }
    }
    Ok(kernel_unchecked(domain, t, x, y))
}

pub(crate) fn kernel_unchecked(domain: &Domain1D, t: f64, x: f64, y: f64) -> f64 {
    match *domain {
        Domain1D::Line => gaussian(t, x - y),
        Domain1D::HalfLineNeumann => gaussian(t, x - y) + gaussian(t, x + y),
        Domain1D::HalfLineDirichlet => gaussian(t, x - y) - gaussian(t, x + y),
        Domain1D::IntervalNeumann { length } => {
            lattice_sum(t, x - y, 2.0 * length) + lattice_sum(t, x + y, 2.0 * length)
        }
        Domain1D::Circle { length } => lattice_sum(t, x - y, length),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::Quadrature;
    use approx::assert_relative_eq;

    const DOMAINS: [Domain1D; 5] = [
        Domain1D::Line,
        Domain1D::HalfLineNeumann,
        Domain1D::HalfLineDirichlet,
        Domain1D::IntervalNeumann { length: 1.5 },
        Domain1D::Circle { length: 2.0 },
    ];

    fn points(d: &Domain1D) -> Vec<f64> {
        let (lo, hi) = d.extent();
        let (lo, hi) = (lo.max(-3.0), hi.min(3.0));
        (0..=12).map(|i| lo + (hi - lo) * i as f64 / 12.0).collect()
    }

    #[test]
    fn diagonal_values() {
        for t in [1e-3, 0.5, 2.0] {
            let g0 = (4.0 * PI * t as f64).sqrt().recip();
            assert_eq!(kernel_1d(&Domain1D::Line, t, 0.7, 0.7).unwrap(), g0);
            let x: f64 = 0.3;
            let expect = g0 * (1.0 + (-x * x / t).exp());
            assert_relative_eq!(kernel_1d(&Domain1D::HalfLineNeumann, t, x, x).unwrap(), expect, max_relative = 1e-14);
        }
    }

    #[test]
    fn symmetric() {
        for d in &DOMAINS {
            let ps = points(d);
            for t in [1e-3, 0.1, 3.0] {
                for &x in &ps {
                    for &y in &ps {
                        let a = kernel_1d(d, t, x, y).unwrap();
                        let b = kernel_1d(d, t, y, x).unwrap();
                        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{} t={t} x={x} y={y}", d.name());
                    }
                }
            }
        }
    }

    #[test]
    fn circle_trace_is_theta_series() {
        for l in [1.0, 2.0 * PI, 5.0] {
            let c = Domain1D::Circle { length: l };
            for t in [1e-3, 0.1, 1.0, 10.0] {
                let q = Quadrature::with_tolerances(1e-14, 1e-13);
                let integral = q.integrate(|x| kernel_unchecked(&c, t, x, x), 0.0, l).unwrap().value;
                let theta: f64 = (-200i32..=200).map(|n| (-(2.0 * PI * n as f64 / l).powi(2) * t).exp()).sum();
                assert_relative_eq!(integral, theta, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn mass() {
        let q = Quadrature::with_tolerances(1e-13, 1e-12);
        for d in &DOMAINS {
            for t in [0.01, 0.5, 4.0] {
                for &x in points(d).iter().filter(|x| x.abs() <= 1.0) {
                    let (lo, hi) = d.extent();
                    let mass = if hi.is_finite() {
                        q.integrate(|y| kernel_unchecked(d, t, x, y), lo, hi).unwrap().value
                    } else {
                        // Split at x so the peak lies on a node.
                        let left = if lo.is_finite() {
                            q.integrate(|y| kernel_unchecked(d, t, x, y), lo, x).unwrap().value
                        } else {
                            q.integrate_to_infinity(|y| kernel_unchecked(d, t, x, 2.0 * x - y), x).unwrap().value
                        };
                        left + q.integrate_to_infinity(|y| kernel_unchecked(d, t, x, y), x).unwrap().value
                    };
                    // Dirichlet mass is erf(x/2√t) < 1.
                    let expect = if d.is_reflecting() { 1.0 } else { statrs::function::erf::erf(x / (2.0 * t.sqrt())) };
                    assert!((mass - expect).abs() < 1e-8, "{} t={t} x={x}: {mass}", d.name());
                    assert!(d.is_reflecting() || mass <= 1.0);
                }
            }
        }
    }

    #[test]
    fn semigroup() {
        let q = Quadrature::with_tolerances(1e-13, 1e-12);
        for d in [Domain1D::IntervalNeumann { length: 1.5 }, Domain1D::Circle { length: 2.0 }] {
            let l = d.extent().1;
            for (s, t) in [(0.01, 0.02), (0.1, 0.3), (1.0, 2.0)] {
                for (x, y) in [(0.1, 0.2), (0.0, l), (0.7, 1.3)] {
                    let lhs = q
                        .integrate(|z| kernel_unchecked(&d, s, x, z) * kernel_unchecked(&d, t, z, y), 0.0, l)
                        .unwrap()
                        .value;
                    let rhs = kernel_unchecked(&d, s + t, x, y);
                    assert!((lhs - rhs).abs() < 1e-8, "{} s={s} t={t}: {lhs} vs {rhs}", d.name());
                }
            }
        }
    }

    #[test]
    fn rejects_outside_points() {
        assert!(kernel_1d(&Domain1D::HalfLineNeumann, 1.0, -0.1, 0.0).is_err());
        assert!(kernel_1d(&Domain1D::IntervalNeumann { length: 1.0 }, 1.0, 0.5, 1.1).is_err());
        assert!(kernel_1d(&Domain1D::Circle { length: -1.0 }, 1.0, 0.0, 0.0).is_err());
        assert!(kernel_1d(&Domain1D::Line, 0.0, 0.0, 0.0).is_err());
    }
}
