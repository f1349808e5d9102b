//! Seeded random instances and the property suites that run the checkers
//! over them.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::checks::{
    check_basic_f, check_block_matrix_f, check_gromov_shubin, check_short_exact, laplacian_sdf_decomposition,
    HomotopyEquivalence,
};
use super::complex::{FiniteCochainComplex, ShortExactTriple};
use super::inequality::{CheckReport, Violation};
use super::linalg;
use super::space::{TracedMap, TracedSpace};
use crate::error::{Error, Result};

/// Trace normalizations drawn for random instances (`1/|G|` for small groups).
const NORMALIZATIONS: [f64; 4] = [1.0, 0.5, 1.0 / 3.0, 1.0 / 6.0];

/// Generator for random traced spaces, maps and complexes.
pub struct InstanceGen {
    rng: ChaCha8Rng,
}

impl InstanceGen {
    /// Independent stream `instance` of the master `seed`.
    pub fn new(seed: u64, instance: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(instance);
        Self { rng }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn normalization(&mut self) -> f64 {
        NORMALIZATIONS[self.rng.random_range(0..NORMALIZATIONS.len())]
    }

    pub fn gaussian(&mut self, rows: usize, cols: usize) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| self.rng.sample::<f64, _>(StandardNormal))
    }

    /// `AᵀA + I` with Gaussian `A`.
    pub fn gram(&mut self, n: usize) -> DMatrix<f64> {
        let a = self.gaussian(n, n);
        a.transpose() * a + DMatrix::identity(n, n)
    }

    pub fn space(&mut self, dim: usize, normalization: f64) -> TracedSpace {
        let g = self.gram(dim);
        TracedSpace::new(normalization, g).expect("AᵀA + I is positive definite")
    }

    /// Gaussian matrix, rank-deficient with probability `1/3`.
    pub fn matrix(&mut self, rows: usize, cols: usize) -> DMatrix<f64> {
        let full = rows.min(cols);
        if full > 0 && self.rng.random_bool(1.0 / 3.0) {
            let k = self.rng.random_range(0..full);
            self.gaussian(rows, k) * self.gaussian(k, cols)
        } else {
            self.gaussian(rows, cols)
        }
    }

    pub fn map(&mut self, source: &TracedSpace, target: &TracedSpace) -> TracedMap {
        let m = self.matrix(target.dim(), source.dim());
        TracedMap::new(source.clone(), target.clone(), m).expect("finite Gaussian entries")
    }

    /// Map of full rank (Gaussian matrices are generically of full rank).
    pub fn full_rank_map(&mut self, source: &TracedSpace, target: &TracedSpace) -> TracedMap {
        let m = self.gaussian(target.dim(), source.dim());
        TracedMap::new(source.clone(), target.clone(), m).expect("finite Gaussian entries")
    }

    /// Gaussian square matrix with condition number below `10^4`.
    pub fn invertible(&mut self, n: usize) -> DMatrix<f64> {
        loop {
            let a = self.gaussian(n, n);
            if n == 0 {
                return a;
            }
            let sv = linalg::decompose(&a).sigma;
            if sv[n - 1] * 1e4 > sv[0] {
                return a;
            }
        }
    }

    /// Random coordinate matrices `d^p` with `d^{p+1} d^p = 0`.
    pub fn differentials(&mut self, dims: &[usize]) -> Vec<DMatrix<f64>> {
        let mut out: Vec<DMatrix<f64>> = Vec::with_capacity(dims.len().saturating_sub(1));
        for p in 0..dims.len().saturating_sub(1) {
            // d^p must vanish on im d^{p-1}: factor through its annihilator.
            let ann = match out.last() {
                Some(prev) => linalg::kernel(&prev.transpose()),
                None => DMatrix::identity(dims[p], dims[p]),
            };
            let r = self.matrix(dims[p + 1], ann.ncols());
            out.push(r * ann.transpose());
        }
        out
    }

    pub fn complex(&mut self, dims: &[usize], normalization: f64) -> FiniteCochainComplex {
        let spaces: Vec<TracedSpace> = dims.iter().map(|&n| self.space(n, normalization)).collect();
        let ds = self.differentials(dims);
        complex_from(spaces, ds)
    }

    pub fn dims(&mut self, degrees: usize, lo: usize, hi: usize) -> Vec<usize> {
        (0..degrees).map(|_| self.rng.random_range(lo..=hi)).collect()
    }
}

fn complex_from(spaces: Vec<TracedSpace>, ds: Vec<DMatrix<f64>>) -> FiniteCochainComplex {
    let maps = ds
        .into_iter()
        .enumerate()
        .map(|(p, m)| TracedMap::new(spaces[p].clone(), spaces[p + 1].clone(), m).expect("shapes agree"))
        .collect();
    FiniteCochainComplex::new(spaces, maps).expect("d∘d = 0 by construction")
}

/// Random `0 → C → D → E → 0` with `D^p = C^p ⊕ E^p` as vector spaces,
/// `d_D = [[d_C, h], [0, d_E]]` and a random inner product on `D`.
pub fn short_exact_instance(g: &mut InstanceGen, degrees: usize, half_dim: usize) -> Result<ShortExactTriple> {
    let norm = g.normalization();
    let cd = g.dims(degrees, 0, half_dim);
    let ed = g.dims(degrees, 0, half_dim);
    let dc = g.differentials(&cd);
    let de = g.differentials(&ed);
    let zero = |r: usize, c: usize| DMatrix::<f64>::zeros(r, c);
    let dc_at = |p: isize| -> DMatrix<f64> {
        if p >= 0 && (p as usize) < dc.len() {
            dc[p as usize].clone()
        } else {
            zero(dim_at(&cd, p + 1), dim_at(&cd, p))
        }
    };
    let de_at = |p: isize| -> DMatrix<f64> {
        if p >= 0 && (p as usize) < de.len() {
            de[p as usize].clone()
        } else {
            zero(dim_at(&ed, p + 1), dim_at(&ed, p))
        }
    };
    let s: Vec<DMatrix<f64>> = (0..degrees).map(|p| g.gaussian(cd[p], ed[p]) * 0.5).collect();
    let s_at = |p: isize| -> DMatrix<f64> {
        if p >= 0 && (p as usize) < s.len() {
            s[p as usize].clone()
        } else {
            zero(dim_at(&cd, p), dim_at(&ed, p))
        }
    };
    let twist = g.rng().random_bool(0.5);
    let mut dd = Vec::new();
    for p in 0..degrees.saturating_sub(1) {
        let pi = p as isize;
        // Cocycle part: lands in ker d_C^{p+1}, vanishes on im d_E^{p-1}.
        let into = linalg::kernel(&dc_at(pi + 1));
        let off = linalg::kernel(&de_at(pi - 1).transpose());
        let mut h = &into * g.matrix(into.ncols(), off.ncols()) * off.transpose();
        // Coboundary part: d_C s − s d_E.
        if twist {
            h += dc_at(pi) * s_at(pi) - s_at(pi + 1) * de_at(pi);
        }
        dd.push(linalg::block(&dc_at(pi), &h, &zero(ed[p + 1], cd[p]), &de_at(pi)));
    }
    let cs: Vec<TracedSpace> = cd.iter().map(|&n| g.space(n, norm)).collect();
    let es: Vec<TracedSpace> = ed.iter().map(|&n| g.space(n, norm)).collect();
    let ds: Vec<TracedSpace> = (0..degrees).map(|p| g.space(cd[p] + ed[p], norm)).collect();
    let c = complex_from(cs.clone(), dc);
    let e = complex_from(es.clone(), de);
    let d = complex_from(ds.clone(), dd);
    let mut j = Vec::new();
    let mut q = Vec::new();
    for p in 0..degrees {
        let n = cd[p] + ed[p];
        let jm = DMatrix::identity(n, cd[p]);
        let mut qm = zero(ed[p], n);
        qm.view_mut((0, cd[p]), (ed[p], ed[p])).fill_with_identity();
        j.push(TracedMap::new(cs[p].clone(), ds[p].clone(), jm)?);
        q.push(TracedMap::new(ds[p].clone(), es[p].clone(), qm)?);
    }
    ShortExactTriple::new(c, d, e, j, q)
}

fn dim_at(dims: &[usize], p: isize) -> usize {
    if p >= 0 && (p as usize) < dims.len() {
        dims[p as usize]
    } else {
        0
    }
}

/// A pair of homotopy equivalent complexes with explicit data.
pub struct HomotopyInstance {
    pub c: FiniteCochainComplex,
    pub d: FiniteCochainComplex,
    pub f: Vec<TracedMap>,
    pub g: Vec<TracedMap>,
    pub t: Vec<TracedMap>,
}

impl HomotopyInstance {
    pub fn view(&self) -> HomotopyEquivalence<'_> {
        HomotopyEquivalence { c: &self.c, d: &self.d, f: &self.f, g: &self.g, t: &self.t }
    }
}

/// Random homotopy equivalence: either `D = C ⊕ K` with `K` acyclic, or `D`
/// obtained by conjugating `C` with invertible maps; then, half the time, `g`
/// is perturbed by `d S + S d`, which introduces the homotopy `T = S f`.
pub fn homotopy_instance(g: &mut InstanceGen, degrees: usize, max_dim: usize) -> HomotopyInstance {
    let norm = g.normalization();
    let half = (max_dim / 2).max(1);
    let cd = g.dims(degrees, 0, half);
    let c = g.complex(&cd, norm);
    let mut fm: Vec<DMatrix<f64>> = Vec::new();
    let mut gm: Vec<DMatrix<f64>> = Vec::new();
    let (d_spaces, d_diffs): (Vec<TracedSpace>, Vec<DMatrix<f64>>);
    if g.rng().random_bool(0.5) && degrees >= 2 {
        // Cone summand X --iso--> X in degrees (k, k+1).
        let k = g.rng().random_range(0..degrees - 1);
        let x = g.rng().random_range(1..=half);
        let iso = g.invertible(x);
        let extra: Vec<usize> = (0..degrees).map(|p| if p == k || p == k + 1 { x } else { 0 }).collect();
        d_spaces = (0..degrees).map(|p| g.space(cd[p] + extra[p], norm)).collect();
        d_diffs = (0..degrees - 1)
            .map(|p| {
                let dc = c.differential(p as isize).matrix().clone();
                let kp = if p == k { iso.clone() } else { DMatrix::zeros(extra[p + 1], extra[p]) };
                linalg::block_diag(&dc, &kp)
            })
            .collect();
        for p in 0..degrees {
            let n = cd[p] + extra[p];
            fm.push(DMatrix::identity(n, cd[p]));
            gm.push(DMatrix::identity(cd[p], n));
        }
    } else {
        let a: Vec<DMatrix<f64>> = cd.iter().map(|&n| g.invertible(n)).collect();
        let a_inv: Vec<DMatrix<f64>> = a.iter().map(|m| m.clone().try_inverse().expect("well conditioned")).collect();
        d_spaces = cd.iter().map(|&n| g.space(n, norm)).collect();
        d_diffs = (0..degrees - 1)
            .map(|p| &a[p + 1] * c.differential(p as isize).matrix() * &a_inv[p])
            .collect();
        fm = a;
        gm = a_inv;
    }
    let d = complex_from(d_spaces.clone(), d_diffs);
    let mut tm: Vec<DMatrix<f64>> = (0..degrees).map(|p| DMatrix::zeros(dim_at(&cd, p as isize - 1), cd[p])).collect();
    if g.rng().random_bool(0.5) {
        let scale = g.rng().random_range(0.05..1.0);
        let s: Vec<DMatrix<f64>> =
            (0..degrees).map(|p| g.gaussian(dim_at(&cd, p as isize - 1), d.dim(p as isize)) * scale).collect();
        for p in 0..degrees {
            let pi = p as isize;
            let mut gp = gm[p].clone();
            if p >= 1 {
                gp += c.differential(pi - 1).matrix() * &s[p];
            }
            if p + 1 < degrees {
                gp += &s[p + 1] * d.differential(pi).matrix();
            }
            gm[p] = gp;
            tm[p] = &s[p] * &fm[p];
        }
    }
    let f = (0..degrees)
        .map(|p| TracedMap::new(c.space(p as isize), d_spaces[p].clone(), fm[p].clone()).expect("shapes"))
        .collect();
    let gmaps = (0..degrees)
        .map(|p| TracedMap::new(d_spaces[p].clone(), c.space(p as isize), gm[p].clone()).expect("shapes"))
        .collect();
    let t = (0..degrees)
        .map(|p| TracedMap::new(c.space(p as isize), c.space(p as isize - 1), tm[p].clone()).expect("shapes"))
        .collect();
    HomotopyInstance { c, d, f, g: gmaps, t }
}

/// Named property suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Basic,
    Block,
    ShortExact,
    GromovShubin,
    Laplacian,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Basic, Suite::Block, Suite::ShortExact, Suite::GromovShubin, Suite::Laplacian];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Basic => "basic",
            Suite::Block => "block",
            Suite::ShortExact => "short-exact",
            Suite::GromovShubin => "gromov-shubin",
            Suite::Laplacian => "laplacian",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown suite {s:?}; expected one of basic, block, short-exact, gromov-shubin, laplacian")))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub instances: usize,
    #[serde(rename = "maxDim")]
    pub max_dim: usize,
    pub probes: usize,
    pub violations: Vec<Violation>,
    pub skipped: std::collections::BTreeMap<String, usize>,
    pub diagnostics: std::collections::BTreeMap<String, f64>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Runs `instances` random instances of `suite`; every space has dimension at
/// most `max_dim`.
pub fn run_suite(suite: Suite, seed: u64, instances: usize, max_dim: usize) -> Result<SuiteReport> {
    if max_dim < 2 {
        return Err(Error::invalid("max_dim must be at least 2"));
    }
    let reports: Vec<CheckReport> = (0..instances as u64)
        .into_par_iter()
        .map(|k| {
            let mut rep = run_instance(suite, seed, k, max_dim).unwrap_or_else(|e| {
                let mut r = CheckReport::default();
                r.violations.push(Violation {
                    item: format!("instance-error: {e}"),
                    instance: None,
                    lambda: f64::NAN,
                    lhs: f64::NAN,
                    rhs: f64::NAN,
                });
                r
            });
            rep.tag_instance(k);
            rep
        })
        .collect();
    let mut total = CheckReport::default();
    for r in reports {
        total.merge(r);
    }
    Ok(SuiteReport {
        suite,
        seed,
        instances,
        max_dim,
        probes: total.probes,
        violations: total.violations,
        skipped: total.skipped,
        diagnostics: total.diagnostics,
    })
}

fn run_instance(suite: Suite, seed: u64, k: u64, max_dim: usize) -> Result<CheckReport> {
    let mut g = InstanceGen::new(seed, k);
    match suite {
        Suite::Basic => {
            let norm = g.normalization();
            let [du, dv, dw] = [0, 0, 0].map(|_| g.rng().random_range(1..=max_dim));
            let dv2 = g.rng().random_range(dv..=max_dim);
            let du2 = g.rng().random_range(du..=max_dim);
            let (u, v, w) = (g.space(du, norm), g.space(dv, norm), g.space(dw, norm));
            let (v2, u2) = (g.space(dv2, norm), g.space(du2, norm));
            let f = g.map(&u, &v);
            let gm = g.map(&v, &w);
            let i = g.full_rank_map(&v, &v2);
            let p = g.full_rank_map(&u2, &u);
            check_basic_f(&f, &gm, Some(&i), Some(&p))
        }
        Suite::Block => {
            let norm = g.normalization();
            let half = max_dim / 2;
            let [u1, u2, v2] = [0, 0, 0].map(|_| g.rng().random_range(1..=half));
            let v1 = if g.rng().random_bool(0.5) { u1 } else { g.rng().random_range(1..=half) };
            let (su1, su2, sv1, sv2) = (g.space(u1, norm), g.space(u2, norm), g.space(v1, norm), g.space(v2, norm));
            let phi = g.map(&su1, &sv1);
            let gamma = g.map(&su2, &sv1);
            let xi = g.map(&su2, &sv2);
            check_block_matrix_f(&phi, &gamma, &xi)
        }
        Suite::ShortExact => {
            let degrees = g.rng().random_range(2..=4);
            let t = short_exact_instance(&mut g, degrees, max_dim / 2)?;
            let mut rep = CheckReport::default();
            for p in 0..degrees as isize {
                let r = check_short_exact(&t, p);
                rep.merge(r.report);
            }
            Ok(rep)
        }
        Suite::GromovShubin => {
            let degrees = g.rng().random_range(2..=4);
            let h = homotopy_instance(&mut g, degrees, max_dim);
            let mut rep = CheckReport::default();
            for p in 0..degrees as isize {
                rep.merge(check_gromov_shubin(&h.view(), p)?);
            }
            Ok(rep)
        }
        Suite::Laplacian => {
            let norm = g.normalization();
            let degrees = g.rng().random_range(2..=4);
            let dims = g.dims(degrees, 0, max_dim);
            let c = g.complex(&dims, norm);
            let mut rep = CheckReport::default();
            for p in 0..degrees as isize {
                rep.merge(laplacian_sdf_decomposition(&c, p));
                // Projector and restricted constructions of F_p must agree.
                let a = c.sdf(p);
                let b = c.sdf_via_projector(p);
                rep.record(
                    "complex-sdf",
                    super::inequality::Inequality::new(
                        vec![super::inequality::Term::plain(&a)],
                        vec![super::inequality::Term::plain(&b)],
                    )
                    .check_equality(),
                );
            }
            Ok(rep)
        }
    }
}
