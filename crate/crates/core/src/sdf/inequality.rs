//! Pointwise comparison of sums of rescaled step functions.
//!
//! Every term has the form `F(c · λ^a)` with `F` a right-continuous step
//! function, so both sides are step functions of `λ` whose jumps sit at the
//! preimages of the breakpoints. Checking those preimages, the midpoints
//! between them, `0` and one point past the last jump decides `≤` on the whole
//! admissible range.

use std::collections::BTreeMap;

use serde::Serialize;

use super::density::SpectralDensity;

/// Relative widening of right-hand arguments. Steps that coincide in exact
/// arithmetic may land on either side of each other after rounding.
pub const ARGUMENT_SLACK: f64 = 1e-8;
/// Absolute tolerance on compared values (normalized dimensions).
pub const VALUE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy)]
pub struct Term<'a> {
    pub sdf: &'a SpectralDensity,
    pub scale: f64,
    pub power: f64,
}

impl<'a> Term<'a> {
    pub fn new(sdf: &'a SpectralDensity, scale: f64, power: f64) -> Self {
        Self { sdf, scale, power }
    }

    pub fn plain(sdf: &'a SpectralDensity) -> Self {
        Self::new(sdf, 1.0, 1.0)
    }

    fn argument(&self, lambda: f64) -> f64 {
        if lambda == 0.0 {
            0.0
        } else {
            self.scale * lambda.powf(self.power)
        }
    }

    fn eval(&self, lambda: f64, widen: f64) -> f64 {
        self.sdf.eval(self.argument(lambda) * widen)
    }

    fn jumps(&self, out: &mut Vec<f64>) {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return;
        }
        for &(b, _) in self.sdf.breakpoints() {
            if b > 0.0 {
                out.push((b / self.scale).powf(1.0 / self.power));
            }
        }
    }
}

/// `Σ lhs ≤ Σ rhs + offset` on `0 ≤ λ < upper`.
#[derive(Debug, Clone)]
pub struct Inequality<'a> {
    pub lhs: Vec<Term<'a>>,
    pub rhs: Vec<Term<'a>>,
    pub offset: f64,
    pub upper: f64,
    /// Right-hand sides are read at `λ + resolution`.
    pub resolution: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Probe {
    pub lambda: f64,
    pub lhs: f64,
    pub rhs: f64,
}

impl<'a> Inequality<'a> {
    pub fn new(lhs: Vec<Term<'a>>, rhs: Vec<Term<'a>>) -> Self {
        Self { lhs, rhs, offset: 0.0, upper: f64::INFINITY, resolution: 0.0 }
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    /// Absolute uncertainty of the spectra in the `λ` variable, for sides built
    /// from composites whose small levels are only known to that accuracy.
    pub fn with_resolution(mut self, resolution: f64) -> Self {
        self.resolution = resolution;
        self
    }

    pub fn below(mut self, upper: f64) -> Self {
        self.upper = upper;
        self
    }

    /// Sample points: 0, every jump, midpoints, and one point past the last jump.
    pub fn probe_points(&self) -> Vec<f64> {
        let mut jumps = Vec::new();
        for t in self.lhs.iter().chain(&self.rhs) {
            t.jumps(&mut jumps);
        }
        probe_points(jumps, self.upper)
    }

    /// Evaluates both sides at every probe point; returns the failures and
    /// the number of points examined.
    pub fn check(&self) -> (usize, Vec<Probe>) {
        let pts = self.probe_points();
        let mut bad = Vec::new();
        for &lambda in &pts {
            let lhs: f64 = self.lhs.iter().map(|t| t.eval(lambda, 1.0)).sum();
            let rhs: f64 =
                self.rhs.iter().map(|t| t.eval(lambda + self.resolution, 1.0 + ARGUMENT_SLACK)).sum::<f64>()
                    + self.offset;
            if lhs > rhs + VALUE_TOL {
                bad.push(Probe { lambda, lhs, rhs });
            }
        }
        (pts.len(), bad)
    }

    /// Checks the inequality in both directions.
    pub fn check_equality(&self) -> (usize, Vec<Probe>) {
        let (n1, mut bad) = self.check();
        let reversed = Inequality {
            lhs: self.rhs.clone(),
            rhs: self.lhs.clone(),
            offset: -self.offset,
            upper: self.upper,
            resolution: self.resolution,
        };
        let (n2, bad2) = reversed.check();
        bad.extend(bad2.into_iter().map(|p| Probe { lambda: p.lambda, lhs: p.rhs, rhs: p.lhs }));
        (n1 + n2, bad)
    }
}

/// Probe grid on `[0, upper)` for step functions jumping at `jumps`.
pub fn probe_points(mut jumps: Vec<f64>, upper: f64) -> Vec<f64> {
    jumps.retain(|x| x.is_finite() && *x < upper);
    jumps.sort_by(f64::total_cmp);
    jumps.dedup();
    let mut pts = Vec::with_capacity(2 * jumps.len() + 2);
    let mut prev = 0.0;
    pts.push(0.0);
    for &x in &jumps {
        if x > prev {
            pts.push(0.5 * (prev + x));
        }
        pts.push(x);
        prev = x;
    }
    let past = if prev > 0.0 { 2.0 * prev } else { 1.0 };
    if past < upper {
        pts.push(past);
    } else if upper.is_finite() && upper > prev {
        pts.push(0.5 * (prev + upper));
    }
    pts.retain(|&x| x < upper);
    pts
}

/// A failed probe, labelled with the check item it belongs to.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub item: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance: Option<u64>,
    pub lambda: f64,
    pub lhs: f64,
    pub rhs: f64,
}

/// Outcome of one or more inequality checks.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CheckReport {
    pub probes: usize,
    pub violations: Vec<Violation>,
    /// Items not evaluated because a side condition failed, with counts.
    pub skipped: BTreeMap<String, usize>,
    /// Informational counters that do not count as failures.
    pub diagnostics: BTreeMap<String, f64>,
}

impl CheckReport {
    pub fn record(&mut self, item: &str, outcome: (usize, Vec<Probe>)) {
        self.probes += outcome.0;
        self.violations.extend(outcome.1.into_iter().map(|p| Violation {
            item: item.to_string(),
            instance: None,
            lambda: p.lambda,
            lhs: p.lhs,
            rhs: p.rhs,
        }));
    }

    pub fn skip(&mut self, item: &str) {
        *self.skipped.entry(item.to_string()).or_default() += 1;
    }

    pub fn note(&mut self, key: &str, value: f64) {
        *self.diagnostics.entry(key.to_string()).or_default() += value;
    }

    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn tag_instance(&mut self, instance: u64) {
        for v in &mut self.violations {
            v.instance = Some(instance);
        }
    }

    pub fn merge(&mut self, other: CheckReport) {
        self.probes += other.probes;
        self.violations.extend(other.violations);
        for (k, v) in other.skipped {
            *self.skipped.entry(k).or_default() += v;
        }
        for (k, v) in other.diagnostics {
            *self.diagnostics.entry(k).or_default() += v;
        }
    }
}
