//! The constants `c(i, m)` in the small-time part of `ζ'(0)`.
//!
//! For `a = (m − i)/2 > 0` the constant is `d/ds [Γ(s)^{−1} (s − a)^{−1}]` at
//! `s = 0`. Two closed forms are in circulation, `−(m−i)/2` and `−2/(m−i)`;
//! they agree only at `m − i = 2`. The oracle here evaluates the derivative
//! from the Taylor series of `1/Γ` and picks the closed form it matches.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::Complex;
use serde::Serialize;

/// Euler–Mascheroni constant, `−Γ'(1)`.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_86;

/// Residual below which a closed form counts as matching the oracle.
pub const CIM_TOL: f64 = 1e-10;

/// Orders `m − i` tested by the oracle.
const ORDERS: std::ops::RangeInclusive<usize> = 1..=8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    /// `c(i, m) = −(m − i)/2`.
    Stated,
    /// `c(i, m) = −2/(m − i)`.
    Derived,
}

impl Convention {
    pub fn value(self, order: usize) -> f64 {
        let k = order as f64;
        match self {
            Convention::Stated => -k / 2.0,
            Convention::Derived => -2.0 / k,
        }
    }

    pub fn formula(self) -> &'static str {
        match self {
            Convention::Stated => "-(m-i)/2",
            Convention::Derived => "-2/(m-i)",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CimRow {
    /// `m − i`.
    pub order: usize,
    pub oracle: f64,
    pub stated: f64,
    pub derived: f64,
    pub stated_residual: f64,
    pub derived_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CimResolution {
    /// The unique closed form matching the oracle on every order, if any.
    pub convention: Option<Convention>,
    pub rows: Vec<CimRow>,
    /// Largest residual of the selected closed form.
    pub residual: f64,
    /// `|Γ'(1) + γ|` by numerical differentiation of `Γ`.
    pub gamma_residual: f64,
    /// Orders at which the stated closed form disagrees with the oracle.
    pub stated_disagrees_at: Vec<usize>,
}

/// `ζ(k)` for integer `k ≥ 2` by Euler–Maclaurin summation.
fn riemann_zeta(k: u32) -> f64 {
    const N: f64 = 12.0;
    // B_{2j} / (2j)!
    const B: [f64; 6] = [
        1.0 / 12.0,
        -1.0 / 720.0,
        1.0 / 30240.0,
        -1.0 / 1209600.0,
        1.0 / 47900160.0,
        -691.0 / 1307674368000.0,
    ];
    let s = k as f64;
    let mut sum: f64 = (1..N as usize).map(|n| (n as f64).powf(-s)).sum();
    sum += N.powf(1.0 - s) / (s - 1.0) + 0.5 * N.powf(-s);
    // Rising factorial s (s+1) … (s+2j−2).
    let mut rising = s;
    for (j, b) in B.iter().enumerate() {
        let j = j + 1;
        sum += b * rising * N.powf(-s - (2 * j) as f64 + 1.0);
        rising *= (s + (2 * j - 1) as f64) * (s + (2 * j) as f64);
    }
    sum
}

/// `1/Γ(z) = z exp(γ z − Σ_{k≥2} (−1)^k ζ(k) z^k / k)` for `|z| < 1`.
fn reciprocal_gamma(z: Complex<f64>, zetas: &[f64]) -> Complex<f64> {
    let mut log = z * EULER_GAMMA;
    let mut power = z;
    for (idx, &zk) in zetas.iter().enumerate() {
        let k = idx + 2;
        power *= z;
        let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
        log += power * (sign * zk / k as f64);
    }
    z * log.exp()
}

fn zeta_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| (2..=48).map(riemann_zeta).collect())
}

/// `d/ds [Γ(s)^{−1} / (s − a)]` at `s = 0`, for `a ≥ 1/2`, by the Cauchy
/// integral over `|s| = 1/4` with the trapezoidal rule.
pub fn oracle(a: f64) -> f64 {
    assert!(a >= 0.5, "oracle needs a pole at distance ≥ 1/2 from 0");
    const NODES: usize = 64;
    const RADIUS: f64 = 0.25;
    let zetas = zeta_table();
    let mut acc = Complex::new(0.0, 0.0);
    for k in 0..NODES {
        let z = Complex::from_polar(RADIUS, 2.0 * PI * k as f64 / NODES as f64);
        let phi = reciprocal_gamma(z, zetas) / (z - a);
        acc += phi / z;
    }
    acc.re / NODES as f64
}

/// `Γ'(1)` by Richardson-extrapolated central differences.
fn gamma_derivative_at_one() -> f64 {
    use statrs::function::gamma::gamma;
    let levels = 5;
    let mut table = vec![vec![0.0; levels]; levels];
    let mut h = 0.2;
    for i in 0..levels {
        table[i][0] = (gamma(1.0 + h) - gamma(1.0 - h)) / (2.0 * h);
        let mut f = 4.0;
        for j in 1..=i {
            table[i][j] = table[i][j - 1] + (table[i][j - 1] - table[i - 1][j - 1]) / (f - 1.0);
            f *= 4.0;
        }
        h /= 2.0;
    }
    table[levels - 1][levels - 1]
}

fn run() -> CimResolution {
    let rows: Vec<CimRow> = ORDERS
        .map(|order| {
            let oracle = oracle(order as f64 / 2.0);
            let stated = Convention::Stated.value(order);
            let derived = Convention::Derived.value(order);
            CimRow {
                order,
                oracle,
                stated,
                derived,
                stated_residual: (stated - oracle).abs(),
                derived_residual: (derived - oracle).abs(),
            }
        })
        .collect();
    let worst = |c: Convention| {
        rows.iter()
            .map(|r| if c == Convention::Stated { r.stated_residual } else { r.derived_residual })
            .fold(0.0, f64::max)
    };
    let matching: Vec<Convention> =
        [Convention::Stated, Convention::Derived].into_iter().filter(|&c| worst(c) < CIM_TOL).collect();
    let convention = if matching.len() == 1 { Some(matching[0]) } else { None };
    let residual = convention.map(worst).unwrap_or(f64::NAN);
    let stated_disagrees_at = rows.iter().filter(|r| r.stated_residual >= CIM_TOL).map(|r| r.order).collect();
    CimResolution {
        convention,
        rows,
        residual,
        gamma_residual: (gamma_derivative_at_one() + EULER_GAMMA).abs(),
        stated_disagrees_at,
    }
}

/// The oracle outcome, computed once per process.
pub fn resolve() -> &'static CimResolution {
    static RESOLUTION: OnceLock<CimResolution> = OnceLock::new();
    RESOLUTION.get_or_init(run)
}

/// `c(i, m)`; `c(m, m) = γ`.
pub fn c_im(i: usize, m: usize) -> f64 {
    assert!(i <= m, "c(i, m) needs i ≤ m");
    if i == m {
        return EULER_GAMMA;
    }
    let order = m - i;
    match resolve().convention {
        Some(c) => c.value(order),
        None => oracle(order as f64 / 2.0),
    }
}
