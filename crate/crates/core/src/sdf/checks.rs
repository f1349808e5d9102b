//! Checkers for the spectral density inequalities on finite-dimensional
//! instances. Each returns a [`CheckReport`]; an empty violation list means the
//! inequality held at every probe point.

use serde::Serialize;

use super::complex::{FiniteCochainComplex, ShortExactTriple};
use super::density::SpectralDensity;
use super::inequality::{probe_points, CheckReport, Inequality, Probe, Term, ARGUMENT_SLACK, VALUE_TOL};
use super::linalg::{self, RANK_TOL};
use super::space::{TracedMap, TracedSpace};
use crate::error::{Error, Result};

const SPLITS: [f64; 3] = [0.25, 0.5, 0.75];

fn require_composable(outer: &TracedMap, inner: &TracedMap, what: &str) -> Result<()> {
    if inner.target().compatible(outer.source()) {
        Ok(())
    } else {
        Err(Error::Shape(format!("{what}: maps are not composable")))
    }
}

/// Basic monotonicity and composition inequalities for `f: U → V`,
/// `g: V → W`, an injection `i: V → V'` and a surjection `p: U' → U`.
///
/// Items `F.k` concern `F`, items `Fbar.k` concern `F̄`. Item `F.6` is the
/// identity `F(f*f, λ) = F(f, √λ)`.
pub fn check_basic_f(
    f: &TracedMap,
    g: &TracedMap,
    i: Option<&TracedMap>,
    p: Option<&TracedMap>,
) -> Result<CheckReport> {
    require_composable(g, f, "g ∘ f")?;
    let mut rep = CheckReport::default();
    let gf = g.compose(f)?;
    let (ff, fg, fgf) = (f.sdf(), g.sdf(), gf.sdf());
    let (bf, bg, bgf) = (ff.reduced(), fg.reduced(), fgf.reduced());

    rep.record(
        "F.1",
        Inequality::new(vec![Term::plain(&ff)], vec![Term::new(&fgf, g.norm(), 1.0)]).check(),
    );
    if gf.rank() == f.rank() {
        rep.record(
            "Fbar.1",
            Inequality::new(vec![Term::plain(&bf)], vec![Term::new(&bgf, g.norm(), 1.0)]).check(),
        );
    } else {
        rep.skip("Fbar.1");
    }

    if f.is_surjective() {
        rep.record(
            "F.2",
            Inequality::new(vec![Term::plain(&fg)], vec![Term::new(&fgf, f.norm(), 1.0)]).check(),
        );
        rep.record(
            "Fbar.2",
            Inequality::new(vec![Term::plain(&bg)], vec![Term::new(&bgf, f.norm(), 1.0)]).check(),
        );
    } else {
        rep.skip("F.2");
        rep.skip("Fbar.2");
    }

    // ker g ⊂ im f  ⇔  nullity(g) = rank f − rank gf.
    let kernel_inside_image = g.nullity() == f.rank() - gf.rank();
    for r in SPLITS {
        rep.record(
            "F.3",
            Inequality::new(
                vec![Term::plain(&fgf)],
                vec![Term::new(&fg, 1.0, 1.0 - r), Term::new(&ff, 1.0, r)],
            )
            .check(),
        );
        if kernel_inside_image {
            rep.record(
                "Fbar.3",
                Inequality::new(
                    vec![Term::plain(&bgf)],
                    vec![Term::new(&bg, 1.0, 1.0 - r), Term::new(&bf, 1.0, r)],
                )
                .check(),
            );
        } else {
            rep.skip("Fbar.3");
        }
    }

    match i {
        Some(i) if i.is_injective() => {
            require_composable(i, f, "i ∘ f")?;
            let iff = i.compose(f)?;
            let (fi, bi) = (iff.sdf(), iff.reduced_sdf());
            let c = i.inverse_norm();
            rep.record("F.4", Inequality::new(vec![Term::plain(&fi)], vec![Term::new(&ff, c, 1.0)]).check());
            rep.record("Fbar.4", Inequality::new(vec![Term::plain(&bi)], vec![Term::new(&bf, c, 1.0)]).check());
        }
        Some(_) => {
            rep.skip("F.4");
            rep.skip("Fbar.4");
        }
        None => {}
    }

    match p {
        Some(p) if p.is_surjective() => {
            require_composable(f, p, "f ∘ p")?;
            let fp = f.compose(p)?;
            let (ffp, bfp) = (fp.sdf(), fp.reduced_sdf());
            rep.record(
                "F.5",
                Inequality::new(vec![Term::plain(&ff)], vec![Term::new(&ffp, p.norm(), 1.0)]).check(),
            );
            rep.record(
                "Fbar.5",
                Inequality::new(vec![Term::plain(&bfp)], vec![Term::new(&bf, p.inverse_norm(), 1.0)]).check(),
            );
            let ker_p = p.nullity() as f64 * p.source().normalization();
            rep.record(
                "Fbar.6",
                Inequality::new(vec![Term::plain(&bf)], vec![Term::new(&bfp, p.norm(), 1.0)])
                    .with_offset(ker_p)
                    .check(),
            );
        }
        Some(_) => {
            rep.skip("F.5");
            rep.skip("Fbar.5");
            rep.skip("Fbar.6");
        }
        None => {}
    }

    // F(f*f, λ) = F(f, √λ); the transposed placement is tracked separately.
    // Levels of f*f below the rank cutoff of ‖f‖² are indistinguishable from 0.
    let fsf = f.adjoint().compose(f)?.sdf();
    let resolution = 2.0 * linalg::RANK_TOL * f.norm() * f.norm();
    rep.record(
        "F.6",
        Inequality::new(vec![Term::plain(&fsf)], vec![Term::new(&ff, 1.0, 0.5)])
            .with_resolution(resolution)
            .check_equality(),
    );
    let (_, literal) =
        Inequality::new(vec![Term::new(&fsf, 1.0, 0.5)], vec![Term::plain(&ff)]).check_equality();
    rep.note("F.6.literal_mismatches", literal.len() as f64);

    rep.record("adjoint", check_adjoint(f));
    Ok(rep)
}

/// `F̄(f, λ) = F̄(f*, λ)`.
pub fn check_adjoint(f: &TracedMap) -> (usize, Vec<Probe>) {
    let a = f.reduced_sdf();
    let b = f.adjoint().reduced_sdf();
    Inequality::new(vec![Term::plain(&a)], vec![Term::plain(&b)]).check_equality()
}

/// Inequalities for the upper triangular block map `[[φ, γ], [0, ξ]]`.
pub fn check_block_matrix_f(phi: &TracedMap, gamma: &TracedMap, xi: &TracedMap) -> Result<CheckReport> {
    let m = TracedMap::upper_block(phi, gamma, xi)?;
    let zero = TracedMap::zero(gamma.source().clone(), gamma.target().clone());
    let diag = TracedMap::upper_block(phi, &zero, xi)?;
    let mut rep = CheckReport::default();
    let (fm, fphi, fxi, fdiag) = (m.sdf(), phi.sdf(), xi.sdf(), diag.sdf());
    let (bm, bphi, bxi, bdiag) = (fm.reduced(), fphi.reduced(), fxi.reduced(), fdiag.reduced());
    let ng = gamma.norm();

    rep.record(
        "F.1",
        Inequality::new(vec![Term::plain(&fdiag)], vec![Term::plain(&fphi), Term::plain(&fxi)]).check_equality(),
    );
    rep.record(
        "Fbar.1",
        Inequality::new(vec![Term::plain(&bdiag)], vec![Term::plain(&bphi), Term::plain(&bxi)]).check_equality(),
    );

    if phi.is_invertible() {
        let c = 4.0 + 2.0 * ng * phi.inverse_norm();
        rep.record(
            "F.2",
            Inequality::new(vec![Term::plain(&fm)], vec![Term::new(&fphi, c, 1.0), Term::new(&fxi, c, 1.0)]).check(),
        );
        rep.record(
            "Fbar.2",
            Inequality::new(vec![Term::plain(&bm)], vec![Term::new(&bphi, c, 1.0), Term::new(&bxi, c, 1.0)]).check(),
        );
    } else {
        rep.skip("F.2");
        rep.skip("Fbar.2");
    }

    let c3 = 4.0 + 2.0 * ng;
    let bar3 = xi.is_injective() || phi.is_surjective();
    for r in SPLITS {
        let upper = c3.powf(1.0 / (r - 1.0));
        rep.record(
            "F.3",
            Inequality::new(vec![Term::plain(&fm)], vec![Term::new(&fphi, 1.0, r), Term::new(&fxi, c3, 1.0 - r)])
                .below(upper)
                .check(),
        );
        if bar3 {
            rep.record(
                "Fbar.3",
                Inequality::new(vec![Term::plain(&bm)], vec![Term::new(&bphi, 1.0, r), Term::new(&bxi, c3, 1.0 - r)])
                    .below(upper)
                    .check(),
            );
        } else {
            rep.skip("Fbar.3");
        }
    }

    let c4 = 2.0 * (1.0 + ng + xi.norm());
    rep.record("F.4", Inequality::new(vec![Term::plain(&fphi)], vec![Term::new(&fm, c4, 1.0)]).check());
    if xi.is_injective() {
        rep.record("Fbar.4", Inequality::new(vec![Term::plain(&bphi)], vec![Term::new(&bm, c4, 1.0)]).check());
    } else {
        rep.skip("Fbar.4");
    }

    if phi.is_surjective() {
        let c5 = 2.0 * (1.0 + ng + phi.norm());
        rep.record(
            "F.5",
            Inequality::new(vec![Term::plain(&fxi)], vec![Term::new(&fm, c5, 1.0)]).below(1.0).check(),
        );
        let ker_phi = phi.nullity() as f64 * phi.source().normalization();
        rep.record(
            "Fbar.5",
            Inequality::new(vec![Term::plain(&bxi)], vec![Term::new(&bm, c5, 1.0)]).with_offset(ker_phi).check(),
        );
    } else {
        rep.skip("F.5");
        rep.skip("Fbar.5");
    }
    Ok(rep)
}

/// Constants of the short exact sequence estimate in degree `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShortExactConstants {
    pub c_e: f64,
    pub c_c: f64,
    pub c_delta: f64,
    pub c_1: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ShortExactReport {
    pub degree: isize,
    pub constants: ShortExactConstants,
    /// `dim H^p(E)` and `dim H^{p+1}(C)`.
    pub cohomology: (usize, usize),
    pub delta_rank: usize,
    pub report: CheckReport,
}

/// `F̄_p(D, λ) ≤ F̄_p(E, c_E λ^{1/2}) + F̄(δ^p, c_δ λ^{1/4}) + F̄_p(C, c_C λ^{1/4})`
/// for `0 ≤ λ < c₁`.
pub fn check_short_exact(t: &ShortExactTriple, p: isize) -> ShortExactReport {
    let nd = t.d.differential(p).norm();
    let q_next = map_at(&t.q, p + 1).map_or(0.0, |m| m.norm());
    let q_inv = map_at(&t.q, p).map_or(0.0, |m| m.inverse_norm());
    let j_norm = map_at(&t.j, p).map_or(0.0, |m| m.norm());
    let j_inv_next = map_at(&t.j, p + 1).map_or(0.0, |m| m.inverse_norm());
    let constants = ShortExactConstants {
        c_e: (4.0 + 2.0 * nd) * q_next * q_inv,
        c_c: j_inv_next.sqrt() * j_norm,
        c_delta: j_inv_next.sqrt() * (4.0 + 2.0 * j_inv_next * nd) * q_inv,
        c_1: (4.0 + 2.0 * nd).powf(-0.5).min((4.0 + 2.0 * j_inv_next * nd).powf(-0.5)),
    };
    let delta = t.connecting_map(p);
    let fd = t.d.reduced_sdf(p);
    let fe = t.e.reduced_sdf(p);
    let fc = t.c.reduced_sdf(p);
    let fdelta = delta.reduced_sdf();
    let mut report = CheckReport::default();
    report.record(
        "short-exact",
        Inequality::new(
            vec![Term::plain(&fd)],
            vec![
                Term::new(&fe, constants.c_e, 0.5),
                Term::new(&fdelta, constants.c_delta, 0.25),
                Term::new(&fc, constants.c_c, 0.25),
            ],
        )
        .below(constants.c_1)
        .check(),
    );
    ShortExactReport {
        degree: p,
        constants,
        cohomology: (delta.source().dim(), delta.target().dim()),
        delta_rank: delta.rank(),
        report,
    }
}

fn map_at(maps: &[TracedMap], p: isize) -> Option<&TracedMap> {
    if p < 0 {
        None
    } else {
        maps.get(p as usize)
    }
}

/// Homotopy data `g ∘ f − id = T d + d T` between complexes `C` and `D`.
/// `f[p]: C^p → D^p`, `g[p]: D^p → C^p`, `t[p]: C^p → C^{p−1}`.
#[derive(Debug, Clone)]
pub struct HomotopyEquivalence<'a> {
    pub c: &'a FiniteCochainComplex,
    pub d: &'a FiniteCochainComplex,
    pub f: &'a [TracedMap],
    pub g: &'a [TracedMap],
    pub t: &'a [TracedMap],
}

impl HomotopyEquivalence<'_> {
    fn whitened(maps: &[TracedMap], p: isize, rows: usize, cols: usize) -> nalgebra::DMatrix<f64> {
        match map_at(maps, p) {
            Some(m) => m.whitened().clone(),
            None => nalgebra::DMatrix::zeros(rows, cols),
        }
    }

    /// `‖g_p f_p − id − (T_{p+1} d^p + d^{p−1} T_p)‖`.
    pub fn residual(&self, p: isize) -> f64 {
        let n = self.c.dim(p);
        let f = Self::whitened(self.f, p, self.d.dim(p), n);
        let g = Self::whitened(self.g, p, n, self.d.dim(p));
        let t_next = Self::whitened(self.t, p + 1, n, self.c.dim(p + 1));
        let t_here = Self::whitened(self.t, p, self.c.dim(p - 1), n);
        let dc = self.c.differential(p).whitened().clone();
        let dc_prev = self.c.differential(p - 1).whitened().clone();
        let r = g * f - nalgebra::DMatrix::identity(n, n) - (t_next * dc + dc_prev * t_here);
        linalg::norm(&r)
    }

    /// `‖d_D f_p − f_{p+1} d_C‖` and the same for `g`.
    pub fn chain_defect(&self, p: isize) -> f64 {
        let f = Self::whitened(self.f, p, self.d.dim(p), self.c.dim(p));
        let f1 = Self::whitened(self.f, p + 1, self.d.dim(p + 1), self.c.dim(p + 1));
        let g = Self::whitened(self.g, p, self.c.dim(p), self.d.dim(p));
        let g1 = Self::whitened(self.g, p + 1, self.c.dim(p + 1), self.d.dim(p + 1));
        let dc = self.c.differential(p).whitened().clone();
        let dd = self.d.differential(p).whitened().clone();
        let a = linalg::norm(&(&dd * &f - &f1 * &dc));
        let b = linalg::norm(&(&dc * &g - &g1 * &dd));
        a.max(b)
    }
}

/// Homotopy-invariance estimate in degree `p`:
/// `F_p(C, λ) ≤ F_p(D, ‖f_{p+1}‖ ‖g_p‖ λ / (1 − ‖T_{p+1}‖ λ))` for
/// `λ < (2‖T_{p+1}‖)^{-1}` (no restriction when `T_{p+1} = 0`).
///
/// The form with `‖f_{p+1}‖² ‖g_p‖² λ` on `λ < (2‖T_{p+1}‖)^{-2}` is evaluated as
/// well and its failures are counted under `diagnostics["squared.failures"]`.
pub fn check_gromov_shubin(h: &HomotopyEquivalence<'_>, p: isize) -> Result<CheckReport> {
    let scale = map_at(h.g, p).map_or(0.0, |m| m.norm()) * map_at(h.f, p).map_or(0.0, |m| m.norm());
    let residual = h.residual(p);
    if residual > 1e-10 * scale.max(1.0) {
        return Err(Error::precondition(format!("homotopy residual {residual:e} in degree {p}")));
    }
    let defect = h.chain_defect(p);
    if defect > 1e-10 * scale.max(1.0) {
        return Err(Error::precondition(format!("f or g is not a chain map in degree {p} ({defect:e})")));
    }
    let nf = map_at(h.f, p + 1).map_or(0.0, |m| m.norm());
    let ng = map_at(h.g, p).map_or(0.0, |m| m.norm());
    let nt = map_at(h.t, p + 1).map_or(0.0, |m| m.norm());
    let fc = h.c.sdf(p);
    let fd = h.d.sdf(p);
    let mut rep = CheckReport::default();

    let threshold = if nt > 0.0 { 0.5 / nt } else { f64::INFINITY };
    // The right-hand argument k λ / (1 − ‖T‖ λ) reaches a breakpoint b at
    // λ = b / (k + ‖T‖ b).
    let k = nf * ng;
    let mut jumps: Vec<f64> = fc.breakpoints().iter().map(|b| b.0).filter(|&b| b > 0.0).collect();
    if k > 0.0 {
        jumps.extend(fd.breakpoints().iter().map(|b| b.0).filter(|&b| b > 0.0).map(|b| b / (k + nt * b)));
    }
    let pts = probe_points(jumps, threshold);
    let mut bad = Vec::new();
    for &lambda in &pts {
        let lhs = fc.eval(lambda);
        let rhs = fd.eval(k * lambda / (1.0 - nt * lambda) * (1.0 + ARGUMENT_SLACK));
        if lhs > rhs + VALUE_TOL {
            bad.push(Probe { lambda, lhs, rhs });
        }
    }
    rep.record("gromov-shubin", (pts.len(), bad));

    let squared_threshold = if nt > 0.0 { (2.0 * nt).powi(-2) } else { f64::INFINITY };
    let (_, literal) = Inequality::new(vec![Term::plain(&fc)], vec![Term::new(&fd, (nf * ng).powi(2), 1.0)])
        .below(squared_threshold)
        .check();
    rep.note("squared.failures", literal.len() as f64);
    Ok(rep)
}

/// Per-breakpoint comparison of the Laplacian with the differentials:
/// `F̄(Δ_p, λ) = F̄_p(C, √λ) + F̄_{p−1}(C, √λ)`.
///
/// `diagnostics["literal.mismatches"]` counts points where
/// `F(Δ_p^⊥, √λ) = F_p(C, λ) + F_{p−1}(C, λ)` fails instead.
pub fn laplacian_sdf_decomposition(c: &FiniteCochainComplex, p: isize) -> CheckReport {
    let lap = c.laplacian(p);
    let (dp, dq) = (c.restricted_differential(p), c.restricted_differential(p - 1));
    // Levels of Δ below the rank cutoff of d*d are not resolved; both sides
    // drop everything under that floor.
    let floor = 2.0 * RANK_TOL * (dp.norm().powi(2) + dq.norm().powi(2));
    let above = |levels: &[f64], square: bool| {
        let kept: Vec<f64> =
            levels.iter().copied().filter(|&l| if square { l * l > floor } else { l > floor }).collect();
        SpectralDensity::from_levels(&kept, c.normalization())
    };
    let fl = above(lap.levels(), false);
    let fp = above(dp.levels(), true);
    let fq = above(dq.levels(), true);
    let mut rep = CheckReport::default();
    rep.record(
        "laplacian",
        Inequality::new(vec![Term::plain(&fl)], vec![Term::new(&fp, 1.0, 0.5), Term::new(&fq, 1.0, 0.5)])
            .with_resolution(floor)
            .check_equality(),
    );
    // Restriction of Δ_p to the kernel complement has no zero levels.
    let perp = SpectralDensity::from_levels(
        &lap.levels().iter().copied().filter(|&l| l > 0.0).collect::<Vec<_>>(),
        c.normalization(),
    );
    let (fp_full, fq_full) = (c.sdf(p), c.sdf(p - 1));
    let (_, literal) = Inequality::new(
        vec![Term::new(&perp, 1.0, 0.5)],
        vec![Term::plain(&fp_full), Term::plain(&fq_full)],
    )
    .check_equality();
    rep.note("literal.mismatches", literal.len() as f64);
    rep
}

/// Largest normalized dimension of a coordinate subspace of `(ker f)^⊥` on
/// which `‖f x‖ ≤ λ ‖x‖`, by enumeration of coordinate subsets.
///
/// `f` must be diagonal with respect to orthogonal bases (diagonal Gram forms
/// and a diagonal matrix).
pub fn variational_sdf(f: &TracedMap, lambda: f64) -> Result<f64> {
    let is_diag = |m: &nalgebra::DMatrix<f64>| {
        let tol = 1e-14 * m.amax().max(1.0);
        m.iter().enumerate().all(|(k, v)| {
            let (i, j) = (k % m.nrows(), k / m.nrows());
            i == j || v.abs() <= tol
        })
    };
    if !(is_diag(f.matrix()) && is_diag(f.source().gram()) && is_diag(f.target().gram())) {
        return Err(Error::invalid("variational_sdf needs a diagonal map on orthogonal bases"));
    }
    let w = f.whitened();
    let n = f.source().dim();
    if n > 20 {
        return Err(Error::invalid("subset enumeration is limited to 20 coordinates"));
    }
    let entries: Vec<f64> = (0..n).map(|i| if i < w.nrows() { w[(i, i)].abs() } else { 0.0 }).collect();
    let top = entries.iter().copied().fold(0.0, f64::max);
    let support: Vec<f64> = entries.into_iter().filter(|&e| top > 0.0 && e > RANK_TOL * top).collect();
    let mut best = 0usize;
    for mask in 0u32..(1u32 << support.len()) {
        let size = mask.count_ones() as usize;
        if size <= best {
            continue;
        }
        let ok = (0..support.len()).filter(|&k| mask >> k & 1 == 1).all(|k| support[k] <= lambda);
        if ok {
            best = size;
        }
    }
    Ok(best as f64 * f.source().normalization())
}

/// Diagonal map helper used by tests and the CLI.
pub fn diagonal_map(entries: &[f64], normalization: f64) -> Result<TracedMap> {
    let s = TracedSpace::euclidean(entries.len(), normalization);
    TracedMap::new(
        s.clone(),
        s,
        nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(entries)),
    )
}
