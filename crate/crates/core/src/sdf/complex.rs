use nalgebra::DMatrix;

use super::density::SpectralDensity;
use super::linalg;
use super::space::{vanishes, TracedMap, TracedSpace};
use crate::error::{Error, Result};

/// Cochain complex `0 → C⁰ → C¹ → … → Cⁿ → 0` of traced spaces sharing one
/// normalization. Degrees outside `0..=n` are zero spaces.
#[derive(Debug, Clone)]
pub struct FiniteCochainComplex {
    spaces: Vec<TracedSpace>,
    differentials: Vec<TracedMap>,
    normalization: f64,
}

impl FiniteCochainComplex {
    /// `differentials[p]` maps `spaces[p]` to `spaces[p + 1]`.
    pub fn new(spaces: Vec<TracedSpace>, differentials: Vec<TracedMap>) -> Result<Self> {
        let Some(first) = spaces.first() else {
            return Err(Error::invalid("a complex needs at least one degree"));
        };
        let normalization = first.normalization();
        if spaces.iter().any(|s| s.normalization() != normalization) {
            return Err(Error::invalid("all degrees must share one normalization"));
        }
        if differentials.len() + 1 != spaces.len() {
            return Err(Error::Shape(format!(
                "{} spaces need {} differentials, got {}",
                spaces.len(),
                spaces.len() - 1,
                differentials.len()
            )));
        }
        for (p, d) in differentials.iter().enumerate() {
            if !(d.source().compatible(&spaces[p]) && d.target().compatible(&spaces[p + 1])) {
                return Err(Error::Shape(format!("differential {p} does not match its spaces")));
            }
        }
        for p in 1..differentials.len() {
            let comp = differentials[p].whitened() * differentials[p - 1].whitened();
            let scale = differentials[p].norm() * differentials[p - 1].norm();
            if !vanishes(&comp, scale) {
                return Err(Error::invalid(format!("d^{p} ∘ d^{} does not vanish", p - 1)));
            }
        }
        Ok(Self { spaces, differentials, normalization })
    }

    /// Highest degree carrying a space.
    pub fn top(&self) -> usize {
        self.spaces.len() - 1
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn space(&self, p: isize) -> TracedSpace {
        if p < 0 || p as usize >= self.spaces.len() {
            TracedSpace::euclidean(0, self.normalization)
        } else {
            self.spaces[p as usize].clone()
        }
    }

    pub fn dim(&self, p: isize) -> usize {
        if p < 0 || p as usize >= self.spaces.len() {
            0
        } else {
            self.spaces[p as usize].dim()
        }
    }

    /// `d^p`, the zero map outside the stored range.
    pub fn differential(&self, p: isize) -> TracedMap {
        if p >= 0 && (p as usize) < self.differentials.len() {
            self.differentials[p as usize].clone()
        } else {
            TracedMap::zero(self.space(p), self.space(p + 1))
        }
    }

    fn whitened(&self, p: isize) -> DMatrix<f64> {
        if p >= 0 && (p as usize) < self.differentials.len() {
            self.differentials[p as usize].whitened().clone()
        } else {
            DMatrix::zeros(self.dim(p + 1), self.dim(p))
        }
    }

    /// Orthonormal (whitened) basis of `(im d^{p−1})^⊥ ⊂ C^p`.
    pub(crate) fn coboundary_complement(&self, p: isize) -> DMatrix<f64> {
        let prev = linalg::decompose(&self.whitened(p - 1));
        linalg::complement(&prev.image, self.dim(p))
    }

    /// `d^p` restricted to `(im d^{p−1})^⊥`, as a map out of a Euclidean space.
    pub fn restricted_differential(&self, p: isize) -> TracedMap {
        let q = self.coboundary_complement(p);
        let source = TracedSpace::euclidean(q.ncols(), self.normalization);
        let target = TracedSpace::euclidean(self.dim(p + 1), self.normalization);
        let w = self.whitened(p) * q;
        TracedMap::new(source, target, w).expect("shapes agree by construction")
    }

    /// `F_p(C, λ)`.
    pub fn sdf(&self, p: isize) -> SpectralDensity {
        self.restricted_differential(p).sdf()
    }

    /// `F̄_p(C, λ)`.
    pub fn reduced_sdf(&self, p: isize) -> SpectralDensity {
        self.sdf(p).reduced()
    }

    /// `F_p` computed through the orthogonal projector onto `(im d^{p−1})^⊥`
    /// on all of `C^p`, with the image of `d^{p−1}` removed from the count.
    pub fn sdf_via_projector(&self, p: isize) -> SpectralDensity {
        let n = self.dim(p);
        let prev = linalg::decompose(&self.whitened(p - 1));
        let proj = DMatrix::identity(n, n) - &prev.image * prev.image.transpose();
        let w = self.whitened(p) * proj;
        let d = linalg::decompose(&w);
        let mut levels = d.sigma;
        levels.resize(n, 0.0);
        levels.sort_by(f64::total_cmp);
        // The first `rank(d^{p−1})` zero levels belong to im d^{p−1}.
        let drop = prev.rank.min(levels.len());
        SpectralDensity::from_levels(&levels[drop..], self.normalization)
    }

    /// `Δ_p = d^{p*} d^p + d^{p−1} d^{p−1*}` on `C^p` (orthonormal coordinates).
    pub fn laplacian(&self, p: isize) -> TracedMap {
        let w = self.whitened(p);
        let v = self.whitened(p - 1);
        let lap = w.transpose() * &w + &v * v.transpose();
        let s = TracedSpace::euclidean(self.dim(p), self.normalization);
        TracedMap::new(s.clone(), s, lap).expect("square by construction")
    }

    /// Orthonormal basis of the harmonic space `ker d^p ∩ (im d^{p−1})^⊥`.
    pub fn harmonic_basis(&self, p: isize) -> DMatrix<f64> {
        let stacked = linalg::vstack(&self.whitened(p), &self.whitened(p - 1).transpose());
        linalg::kernel(&stacked)
    }

    pub fn betti(&self, p: isize) -> usize {
        self.harmonic_basis(p).ncols()
    }
}

/// Degreewise exact `0 → C → D → E → 0` of cochain complexes.
#[derive(Debug, Clone)]
pub struct ShortExactTriple {
    pub c: FiniteCochainComplex,
    pub d: FiniteCochainComplex,
    pub e: FiniteCochainComplex,
    pub j: Vec<TracedMap>,
    pub q: Vec<TracedMap>,
}

impl ShortExactTriple {
    pub fn new(
        c: FiniteCochainComplex,
        d: FiniteCochainComplex,
        e: FiniteCochainComplex,
        j: Vec<TracedMap>,
        q: Vec<TracedMap>,
    ) -> Result<Self> {
        let n = d.top() + 1;
        if c.top() + 1 != n || e.top() + 1 != n || j.len() != n || q.len() != n {
            return Err(Error::Shape("C, D, E, j and q must cover the same degrees".into()));
        }
        for p in 0..n {
            let pi = p as isize;
            if !(j[p].source().compatible(&c.space(pi)) && j[p].target().compatible(&d.space(pi))) {
                return Err(Error::Shape(format!("j_{p} does not map C^{p} to D^{p}")));
            }
            if !(q[p].source().compatible(&d.space(pi)) && q[p].target().compatible(&e.space(pi))) {
                return Err(Error::Shape(format!("q_{p} does not map D^{p} to E^{p}")));
            }
            if !j[p].is_injective() {
                return Err(Error::invalid(format!("j_{p} is not injective")));
            }
            if !q[p].is_surjective() {
                return Err(Error::invalid(format!("q_{p} is not surjective")));
            }
            let qj = q[p].whitened() * j[p].whitened();
            if !vanishes(&qj, q[p].norm() * j[p].norm()) {
                return Err(Error::invalid(format!("q_{p} ∘ j_{p} does not vanish")));
            }
            if j[p].rank() + q[p].rank() != d.dim(pi) {
                return Err(Error::invalid(format!("ker q_{p} differs from im j_{p}")));
            }
        }
        for p in 0..n.saturating_sub(1) {
            let pi = p as isize;
            let lhs = d.differential(pi).whitened() * j[p].whitened();
            let rhs = j[p + 1].whitened() * c.differential(pi).whitened();
            if !vanishes(&(lhs - rhs), d.differential(pi).norm() * j[p].norm() + 1.0) {
                return Err(Error::invalid(format!("j does not commute with d in degree {p}")));
            }
            let lhs = q[p + 1].whitened() * d.differential(pi).whitened();
            let rhs = e.differential(pi).whitened() * q[p].whitened();
            if !vanishes(&(lhs - rhs), d.differential(pi).norm() * q[p + 1].norm() + 1.0) {
                return Err(Error::invalid(format!("q does not commute with d in degree {p}")));
            }
        }
        Ok(Self { c, d, e, j, q })
    }

    fn j_at(&self, p: isize) -> TracedMap {
        if p >= 0 && (p as usize) < self.j.len() {
            self.j[p as usize].clone()
        } else {
            TracedMap::zero(self.c.space(p), self.d.space(p))
        }
    }

    fn q_at(&self, p: isize) -> TracedMap {
        if p >= 0 && (p as usize) < self.q.len() {
            self.q[p as usize].clone()
        } else {
            TracedMap::zero(self.d.space(p), self.e.space(p))
        }
    }

    /// Connecting map `δ^p: H^p(E) → H^{p+1}(C)` in orthonormal bases of the
    /// harmonic representatives.
    pub fn connecting_map(&self, p: isize) -> TracedMap {
        let norm = self.d.normalization();
        let he = self.e.harmonic_basis(p);
        let hc = self.c.harmonic_basis(p + 1);
        let source = TracedSpace::euclidean(he.ncols(), norm);
        let target = TracedSpace::euclidean(hc.ncols(), norm);
        if he.ncols() == 0 || hc.ncols() == 0 {
            return TracedMap::zero(source, target);
        }
        let lift = linalg::pseudo_inverse(self.q_at(p).whitened()) * &he;
        let pushed = self.d.differential(p).whitened() * lift;
        let pulled = linalg::pseudo_inverse(self.j_at(p + 1).whitened()) * pushed;
        let coords = hc.transpose() * pulled;
        TracedMap::new(source, target, coords).expect("shapes agree by construction")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_complex(c: f64) -> FiniteCochainComplex {
        let s = TracedSpace::euclidean(1, 1.0);
        let d = TracedMap::new(s.clone(), s.clone(), DMatrix::from_element(1, 1, c)).unwrap();
        FiniteCochainComplex::new(vec![s.clone(), s], vec![d]).unwrap()
    }

    #[test]
    fn zero_differential_is_all_kernel() {
        let c = scalar_complex(0.0);
        let f = c.sdf(0);
        assert_eq!(f.at_zero(), 1.0);
        assert_eq!(c.betti(0), 1);
        assert_eq!(c.betti(1), 1);
    }

    #[test]
    fn times_two() {
        let c = scalar_complex(2.0);
        let f = c.sdf(0);
        assert_eq!(f.eval(1.99), 0.0);
        assert_eq!(f.eval(2.0), 1.0);
        // In degree 1 the image of d⁰ is everything: nothing is left.
        assert_eq!(c.sdf(1).total(), 0.0);
        assert_eq!(c.betti(0) + c.betti(1), 0);
    }

    #[test]
    fn laplacian_of_times_three() {
        let c = scalar_complex(3.0);
        let lap = c.laplacian(0);
        assert_eq!(lap.levels(), &[9.0]);
        assert_eq!(c.laplacian(1).levels(), &[9.0]);
    }

    #[test]
    fn nonvanishing_square_rejected() {
        let s = TracedSpace::euclidean(1, 1.0);
        let one = TracedMap::identity(s.clone());
        assert!(FiniteCochainComplex::new(vec![s.clone(), s.clone(), s], vec![one.clone(), one]).is_err());
    }

    #[test]
    fn mixed_normalizations_rejected() {
        let a = TracedSpace::euclidean(1, 1.0);
        let b = TracedSpace::euclidean(1, 0.5);
        let d = TracedMap::zero(a.clone(), b.clone());
        assert!(FiniteCochainComplex::new(vec![a, b], vec![d]).is_err());
    }
}
