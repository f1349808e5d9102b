//! Heat-trace models `t ↦ θ^⊥(t)` with their small-time expansion data and
//! large-time decay certificates.

use std::f64::consts::PI;
use std::fmt;

use super::spectrum::Spectrum;

/// Upper bound on `θ^⊥(t)` for `t ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decay {
    /// `θ^⊥ ≡ 0`.
    Vanishing,
    /// `θ^⊥(t) ≤ at_one · e^{−rate (t − 1)}`.
    Exponential { rate: f64, at_one: f64 },
    /// `θ^⊥(t) ≤ constant · t^{−exponent}`.
    PowerLaw { exponent: f64, constant: f64 },
    /// No certificate.
    Unknown,
}

/// A heat trace with kernel removed and its expansion
/// `θ^⊥(t) ~ Σ_{i=0}^{m} c_i t^{−(m−i)/2}` as `t → 0`.
pub trait HeatTrace: Send + Sync {
    fn trace(&self, t: f64) -> f64;

    /// The dimension parameter `m`.
    fn dimension(&self) -> usize;

    /// `c_0, …, c_m`, when known.
    fn coefficients(&self) -> Option<Vec<f64>>;

    /// `θ^⊥(t) − Σ c_i t^{−(m−i)/2}`. Models that can evaluate this without
    /// cancellation should override it.
    fn remainder(&self, t: f64) -> Option<f64> {
        let c = self.coefficients()?;
        Some(self.trace(t) - expansion(&c, self.dimension(), t))
    }

    fn decay(&self) -> Decay;
}

/// `Σ c_i t^{−(m−i)/2}`.
pub fn expansion(c: &[f64], m: usize, t: f64) -> f64 {
    c.iter()
        .enumerate()
        .filter(|(_, &x)| x != 0.0)
        .map(|(i, &x)| x * t.powf(-((m - i) as f64) / 2.0))
        .sum()
}

/// Trace of a finite spectrum viewed in dimension `m`: the expansion is the
/// constant `Σ_{λ>0} w` in the `t⁰` slot.
#[derive(Debug, Clone)]
pub struct SpectrumTrace {
    spectrum: Spectrum,
    m: usize,
}

impl SpectrumTrace {
    pub fn new(spectrum: Spectrum, m: usize) -> Self {
        Self { spectrum, m }
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }
}

impl HeatTrace for SpectrumTrace {
    fn trace(&self, t: f64) -> f64 {
        self.spectrum.trace_unchecked(t, true)
    }

    fn dimension(&self) -> usize {
        self.m
    }

    fn coefficients(&self) -> Option<Vec<f64>> {
        let mut c = vec![0.0; self.m + 1];
        c[self.m] = self.spectrum.perp_weight();
        Some(c)
    }

    fn remainder(&self, t: f64) -> Option<f64> {
        Some(self.spectrum.positive().map(|(l, w)| w * (-t * l).exp_m1()).sum())
    }

    fn decay(&self) -> Decay {
        match self.spectrum.gap() {
            None => Decay::Vanishing,
            Some(gap) => Decay::Exponential { rate: gap, at_one: self.trace(1.0) },
        }
    }
}

/// `⊥`-trace of the Laplacian on the circle of circumference `L`, summed
/// exactly (no truncation beyond double precision).
#[derive(Debug, Clone, Copy)]
pub struct CircleTrace {
    length: f64,
}

impl CircleTrace {
    pub fn new(length: f64) -> crate::Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(crate::Error::invalid("circumference must be positive"));
        }
        Ok(Self { length })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    fn wave(&self) -> f64 {
        2.0 * PI / self.length
    }

    /// `Σ_{n≥1} e^{−(kn)² t}`.
    fn direct_half(&self, t: f64) -> f64 {
        let k2t = self.wave().powi(2) * t;
        let n_max = (42.0 / k2t).sqrt().ceil() as usize + 1;
        (1..=n_max).map(|n| (-k2t * (n * n) as f64).exp()).sum()
    }

    /// `Σ_{j≥1} e^{−j² L²/4t}`.
    fn dual_half(&self, t: f64) -> f64 {
        let q = self.length.powi(2) / (4.0 * t);
        let j_max = (42.0 / q).sqrt().ceil() as usize + 1;
        (1..=j_max).map(|j| (-q * (j * j) as f64).exp()).sum()
    }

    /// Trace with the zero mode included.
    pub fn full_trace(&self, t: f64) -> f64 {
        1.0 + self.trace(t)
    }
}

impl HeatTrace for CircleTrace {
    fn trace(&self, t: f64) -> f64 {
        if self.wave().powi(2) * t >= 1.0 {
            2.0 * self.direct_half(t)
        } else {
            self.length / (4.0 * PI * t).sqrt() * (1.0 + 2.0 * self.dual_half(t)) - 1.0
        }
    }

    fn dimension(&self) -> usize {
        1
    }

    fn coefficients(&self) -> Option<Vec<f64>> {
        Some(vec![self.length / (4.0 * PI).sqrt(), -1.0])
    }

    fn remainder(&self, t: f64) -> Option<f64> {
        let lead = self.length / (4.0 * PI * t).sqrt();
        if self.length.powi(2) / (4.0 * t) >= 1.0 {
            Some(lead * 2.0 * self.dual_half(t))
        } else {
            Some(2.0 * self.direct_half(t) - lead + 1.0)
        }
    }

    fn decay(&self) -> Decay {
        Decay::Exponential { rate: self.wave().powi(2), at_one: self.trace(1.0) }
    }
}

type Func = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// A trace given by closures, for closed forms and synthetic inputs.
pub struct SyntheticTrace {
    trace: Func,
    remainder: Option<Func>,
    m: usize,
    coefficients: Option<Vec<f64>>,
    decay: Decay,
}

impl SyntheticTrace {
    pub fn new(m: usize, trace: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { trace: Box::new(trace), remainder: None, m, coefficients: None, decay: Decay::Unknown }
    }

    pub fn with_coefficients(mut self, c: Vec<f64>) -> Self {
        assert_eq!(c.len(), self.m + 1, "need m + 1 coefficients");
        self.coefficients = Some(c);
        self
    }

    pub fn with_remainder(mut self, r: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.remainder = Some(Box::new(r));
        self
    }

    pub fn with_decay(mut self, decay: Decay) -> Self {
        self.decay = decay;
        self
    }
}

impl fmt::Debug for SyntheticTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SyntheticTrace")
            .field("m", &self.m)
            .field("coefficients", &self.coefficients)
            .field("decay", &self.decay)
            .finish_non_exhaustive()
    }
}

impl HeatTrace for SyntheticTrace {
    fn trace(&self, t: f64) -> f64 {
        (self.trace)(t)
    }

    fn dimension(&self) -> usize {
        self.m
    }

    fn coefficients(&self) -> Option<Vec<f64>> {
        self.coefficients.clone()
    }

    fn remainder(&self, t: f64) -> Option<f64> {
        match &self.remainder {
            Some(r) => Some(r(t)),
            None => {
                let c = self.coefficients.as_ref()?;
                Some(self.trace(t) - expansion(c, self.m, t))
            }
        }
    }

    fn decay(&self) -> Decay {
        self.decay
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn circle_branches_agree() {
        for l in [1.0, 2.0 * PI, 5.0] {
            let c = CircleTrace::new(l).unwrap();
            for t in [1e-3, 0.05, 0.3, 1.0, 4.0] {
                let direct = 2.0 * c.direct_half(t);
                let dual = l / (4.0 * PI * t).sqrt() * (1.0 + 2.0 * c.dual_half(t)) - 1.0;
                assert_relative_eq!(direct, dual, max_relative = 1e-12, epsilon = 1e-14);
                let r = c.remainder(t).unwrap();
                assert_relative_eq!(r, c.trace(t) - expansion(&c.coefficients().unwrap(), 1, t), epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn spectrum_remainder_is_linear_near_zero() {
        let s = SpectrumTrace::new(Spectrum::new(vec![(2.0, 3.0), (0.0, 1.0)]).unwrap(), 2);
        assert_eq!(s.coefficients().unwrap(), vec![0.0, 0.0, 3.0]);
        assert_relative_eq!(s.remainder(1e-9).unwrap(), -6e-9, max_relative = 1e-8);
        assert_eq!(s.decay(), Decay::Exponential { rate: 2.0, at_one: 3.0 * (-2.0f64).exp() });
    }
}
