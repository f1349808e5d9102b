use nalgebra::DMatrix;

use super::density::SpectralDensity;
use super::linalg;
use crate::error::{Error, Result};

/// Finite-dimensional inner-product space with a scalar trace normalization.
///
/// Coordinates are taken with respect to a fixed basis whose Gram matrix is
/// `gram`; `whiten` maps them to coordinates in which the form is Euclidean.
#[derive(Debug, Clone)]
pub struct TracedSpace {
    normalization: f64,
    gram: DMatrix<f64>,
    /// Upper factor `Lᵀ` of `gram = L Lᵀ`.
    whiten: DMatrix<f64>,
    /// `L^{-T}`.
    unwhiten: DMatrix<f64>,
}

impl TracedSpace {
    pub fn new(normalization: f64, gram: DMatrix<f64>) -> Result<Self> {
        if !(normalization.is_finite() && normalization > 0.0) {
            return Err(Error::invalid("normalization must be positive and finite"));
        }
        if !gram.is_square() {
            return Err(Error::Shape(format!("gram form is {}x{}", gram.nrows(), gram.ncols())));
        }
        if gram.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("gram form".into()));
        }
        let n = gram.nrows();
        if n == 0 {
            return Ok(Self::euclidean(0, normalization));
        }
        let scale = gram.amax();
        if (&gram - gram.transpose()).amax() > 1e-12 * scale {
            return Err(Error::NotPositiveDefinite("gram form is not symmetric".into()));
        }
        let sym = (&gram + gram.transpose()) * 0.5;
        let chol = sym
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite("Cholesky factorization failed".into()))?;
        let l = chol.l();
        let whiten = l.transpose();
        let unwhiten = whiten
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::NotPositiveDefinite("singular Cholesky factor".into()))?;
        if (0..n).any(|i| l[(i, i)] <= 0.0) {
            return Err(Error::NotPositiveDefinite("nonpositive pivot".into()));
        }
        Ok(Self { normalization, gram: sym, whiten, unwhiten })
    }

    /// Standard inner product on `R^dim`.
    pub fn euclidean(dim: usize, normalization: f64) -> Self {
        Self {
            normalization,
            gram: DMatrix::identity(dim, dim),
            whiten: DMatrix::identity(dim, dim),
            unwhiten: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn normalized_dim(&self) -> f64 {
        self.normalization * self.dim() as f64
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn inner(&self, u: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
        (u.transpose() * &self.gram * v)[(0, 0)]
    }

    /// Orthogonal direct sum.
    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        if self.normalization != other.normalization {
            return Err(Error::invalid("direct sum of spaces with different normalizations"));
        }
        Ok(Self {
            normalization: self.normalization,
            gram: linalg::block_diag(&self.gram, &other.gram),
            whiten: linalg::block_diag(&self.whiten, &other.whiten),
            unwhiten: linalg::block_diag(&self.unwhiten, &other.unwhiten),
        })
    }

    pub(crate) fn whitener(&self) -> &DMatrix<f64> {
        &self.whiten
    }

    pub(crate) fn unwhitener(&self) -> &DMatrix<f64> {
        &self.unwhiten
    }

    /// Same dimension, normalization and (to rounding) inner product.
    pub fn compatible(&self, other: &Self) -> bool {
        self.dim() == other.dim()
            && self.normalization == other.normalization
            && (&self.gram - &other.gram).amax() <= 1e-12 * self.gram.amax().max(1.0)
    }
}

/// Linear map between traced spaces, given by its coordinate matrix.
#[derive(Debug, Clone)]
pub struct TracedMap {
    source: TracedSpace,
    target: TracedSpace,
    matrix: DMatrix<f64>,
    whitened: DMatrix<f64>,
    /// One entry per source dimension, ascending; exact zeros for the kernel.
    levels: Vec<f64>,
    rank: usize,
}

impl TracedMap {
    pub fn new(source: TracedSpace, target: TracedSpace, matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.shape() != (target.dim(), source.dim()) {
            return Err(Error::Shape(format!(
                "matrix is {}x{}, expected {}x{}",
                matrix.nrows(),
                matrix.ncols(),
                target.dim(),
                source.dim()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("map coefficients".into()));
        }
        let whitened = target.whitener() * &matrix * source.unwhitener();
        Ok(Self::assemble(source, target, matrix, whitened))
    }

    /// Builds the map whose matrix in orthonormal coordinates is `whitened`.
    pub fn from_whitened(source: TracedSpace, target: TracedSpace, whitened: DMatrix<f64>) -> Result<Self> {
        if whitened.shape() != (target.dim(), source.dim()) {
            return Err(Error::Shape("whitened matrix has the wrong shape".into()));
        }
        let matrix = target.unwhitener() * &whitened * source.whitener();
        Self::new(source, target, matrix)
    }

    fn assemble(source: TracedSpace, target: TracedSpace, matrix: DMatrix<f64>, whitened: DMatrix<f64>) -> Self {
        let d = linalg::decompose(&whitened);
        let mut levels = d.sigma.clone();
        levels.resize(source.dim(), 0.0);
        levels.sort_by(f64::total_cmp);
        Self { source, target, matrix, whitened, levels, rank: d.rank }
    }

    pub fn zero(source: TracedSpace, target: TracedSpace) -> Self {
        let matrix = DMatrix::zeros(target.dim(), source.dim());
        let whitened = matrix.clone();
        Self::assemble(source, target, matrix, whitened)
    }

    pub fn identity(space: TracedSpace) -> Self {
        let n = space.dim();
        Self::assemble(space.clone(), space, DMatrix::identity(n, n), DMatrix::identity(n, n))
    }

    pub fn source(&self) -> &TracedSpace {
        &self.source
    }

    pub fn target(&self) -> &TracedSpace {
        &self.target
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Matrix with respect to orthonormal bases of source and target.
    pub fn whitened(&self) -> &DMatrix<f64> {
        &self.whitened
    }

    /// Singular values padded with zeros to the source dimension, ascending.
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn norm(&self) -> f64 {
        self.levels.last().copied().unwrap_or(0.0)
    }

    /// Norm of the inverse from the image to the kernel complement.
    pub fn inverse_norm(&self) -> f64 {
        match self.levels.iter().find(|&&s| s > 0.0) {
            Some(&s) => 1.0 / s,
            None => 0.0,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn nullity(&self) -> usize {
        self.source.dim() - self.rank
    }

    pub fn is_injective(&self) -> bool {
        self.rank == self.source.dim()
    }

    pub fn is_surjective(&self) -> bool {
        self.rank == self.target.dim()
    }

    pub fn is_invertible(&self) -> bool {
        self.is_injective() && self.is_surjective()
    }

    /// `F(f, λ)`.
    pub fn sdf(&self) -> SpectralDensity {
        SpectralDensity::from_levels(&self.levels, self.source.normalization())
    }

    /// `F̄(f, λ)`.
    pub fn reduced_sdf(&self) -> SpectralDensity {
        self.sdf().reduced()
    }

    /// Adjoint with respect to the two inner products.
    pub fn adjoint(&self) -> Self {
        let ginv_source = self.source.unwhitener() * self.source.unwhitener().transpose();
        let matrix = ginv_source * self.matrix.transpose() * self.target.gram();
        Self::assemble(self.target.clone(), self.source.clone(), matrix, self.whitened.transpose())
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &TracedMap) -> Result<Self> {
        if !inner.target.compatible(&self.source) {
            return Err(Error::Shape(format!(
                "cannot compose: inner target has dim {}, outer source has dim {}",
                inner.target.dim(),
                self.source.dim()
            )));
        }
        let matrix = &self.matrix * &inner.matrix;
        let whitened = &self.whitened * &inner.whitened;
        Ok(Self::assemble(inner.source.clone(), self.target.clone(), matrix, whitened))
    }

    pub fn add(&self, other: &TracedMap) -> Result<Self> {
        if !(self.source.compatible(&other.source) && self.target.compatible(&other.target)) {
            return Err(Error::Shape("cannot add maps between different spaces".into()));
        }
        Self::new(self.source.clone(), self.target.clone(), &self.matrix + &other.matrix)
    }

    pub fn scale(&self, c: f64) -> Result<Self> {
        Self::new(self.source.clone(), self.target.clone(), &self.matrix * c)
    }

    /// Upper triangular block map `[[φ, γ], [0, ξ]]: U₁ ⊕ U₂ → V₁ ⊕ V₂`.
    pub fn upper_block(phi: &TracedMap, gamma: &TracedMap, xi: &TracedMap) -> Result<Self> {
        if !(gamma.target.compatible(&phi.target) && gamma.source.compatible(&xi.source)) {
            return Err(Error::Shape("γ must map the source of ξ to the target of φ".into()));
        }
        let source = phi.source.direct_sum(&xi.source)?;
        let target = phi.target.direct_sum(&xi.target)?;
        let zero = DMatrix::zeros(xi.target.dim(), phi.source.dim());
        let matrix = linalg::block(&phi.matrix, &gamma.matrix, &zero, &xi.matrix);
        let wzero = DMatrix::zeros(xi.target.dim(), phi.source.dim());
        let whitened = linalg::block(&phi.whitened, &gamma.whitened, &wzero, &xi.whitened);
        Ok(Self::assemble(source, target, matrix, whitened))
    }

    /// Largest deviation of `⟨f e_i, e_j⟩ − ⟨e_i, f* e_j⟩` over basis vectors.
    pub fn adjoint_defect(&self) -> f64 {
        let adj = self.adjoint();
        let lhs = self.matrix.transpose() * self.target.gram();
        let rhs = self.source.gram() * adj.matrix();
        (lhs - rhs).amax()
    }

    /// True when `self` maps into the target with numerical rank zero.
    pub fn is_zero(&self) -> bool {
        self.rank == 0
    }
}

/// Relative tolerance for "this composite vanishes" checks.
pub(crate) fn vanishes(m: &DMatrix<f64>, scale: f64) -> bool {
    linalg::norm(m) <= 1e-10 * scale.max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn diag(entries: &[f64]) -> TracedMap {
        let n = entries.len();
        let s = TracedSpace::euclidean(n, 1.0);
        TracedMap::new(s.clone(), s, DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(entries))).unwrap()
    }

    #[test]
    fn identity_sdf() {
        let f = TracedMap::identity(TracedSpace::euclidean(3, 1.0));
        let sdf = f.sdf();
        assert_eq!(sdf.eval(0.999), 0.0);
        assert_eq!(sdf.eval(1.0), 3.0);
    }

    #[test]
    fn zero_two_diagonal() {
        let f = diag(&[0.0, 2.0]);
        assert_eq!(f.sdf().eval(0.0), 1.0);
        assert_eq!(f.sdf().eval(1.0), 1.0);
        assert_eq!(f.sdf().eval(2.0), 2.0);
        assert_eq!(f.rank(), 1);
        assert_relative_eq!(f.inverse_norm(), 0.5);
    }

    #[test]
    fn zero_map_reduced_is_zero() {
        let s = TracedSpace::euclidean(2, 1.0);
        let f = TracedMap::zero(s.clone(), s);
        assert_eq!(f.reduced_sdf().total(), 0.0);
    }

    #[test]
    fn gram_must_be_positive_definite() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(TracedSpace::new(1.0, g), Err(Error::NotPositiveDefinite(_))));
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(TracedSpace::new(1.0, g).is_err());
        assert!(TracedSpace::new(0.0, DMatrix::identity(1, 1)).is_err());
    }

    #[test]
    fn non_finite_coefficients_rejected() {
        let s = TracedSpace::euclidean(1, 1.0);
        let m = DMatrix::from_element(1, 1, f64::NAN);
        assert!(matches!(TracedMap::new(s.clone(), s, m), Err(Error::NonFinite(_))));
    }

    #[test]
    fn shape_mismatch_rejected() {
        let s = TracedSpace::euclidean(2, 1.0);
        assert!(TracedMap::new(s.clone(), s, DMatrix::zeros(3, 2)).is_err());
    }

    #[test]
    fn norm_respects_gram() {
        // On a space with gram 4, the vector e has length 2.
        let s = TracedSpace::new(1.0, DMatrix::from_element(1, 1, 4.0)).unwrap();
        let t = TracedSpace::euclidean(1, 1.0);
        let f = TracedMap::new(s, t, DMatrix::from_element(1, 1, 1.0)).unwrap();
        assert_relative_eq!(f.norm(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn adjoint_identity_on_basis() {
        let g1 = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let g2 = DMatrix::from_row_slice(3, 3, &[1.5, 0.1, 0.0, 0.1, 1.0, 0.2, 0.0, 0.2, 3.0]);
        let s = TracedSpace::new(1.0, g1).unwrap();
        let t = TracedSpace::new(1.0, g2).unwrap();
        let m = DMatrix::from_row_slice(3, 2, &[1.0, -2.0, 0.5, 0.0, 3.0, 1.0]);
        let f = TracedMap::new(s, t, m).unwrap();
        assert!(f.adjoint_defect() < 1e-12);
        assert_relative_eq!(f.adjoint().norm(), f.norm(), epsilon = 1e-12);
    }

    #[test]
    fn wide_map_pads_kernel() {
        let s = TracedSpace::euclidean(3, 0.5);
        let t = TracedSpace::euclidean(1, 0.5);
        let f = TracedMap::new(s, t, DMatrix::from_row_slice(1, 3, &[0.0, 3.0, 4.0])).unwrap();
        assert_eq!(f.levels(), &[0.0, 0.0, 5.0]);
        assert_eq!(f.sdf().eval(0.0), 1.0);
        assert_eq!(f.sdf().eval(5.0), 1.5);
        assert!(f.is_surjective());
    }
}
