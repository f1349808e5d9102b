//! Small dense helpers on Euclidean (already whitened) coordinates.

use faer::Mat;
use nalgebra::DMatrix;

/// Relative singular-value cutoff used for every rank and kernel decision.
pub const RANK_TOL: f64 = 1e-10;

/// Thin singular value decomposition with the numerical rank split off.
#[derive(Debug, Clone)]
pub struct Decomposition {
    /// Singular values, descending, already snapped to zero below the cutoff.
    pub sigma: Vec<f64>,
    /// Orthonormal basis of the image (rows × rank).
    pub image: DMatrix<f64>,
    /// Orthonormal basis of the row space, i.e. of `ker⊥` (cols × rank).
    pub coimage: DMatrix<f64>,
    pub rank: usize,
}

pub fn decompose(a: &DMatrix<f64>) -> Decomposition {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Decomposition {
            sigma: vec![0.0; m.min(n)],
            image: DMatrix::zeros(m, 0),
            coimage: DMatrix::zeros(n, 0),
            rank: 0,
        };
    }
    let svd = to_faer(a).thin_svd().expect("SVD of a finite matrix converges");
    let s = svd.S().column_vector();
    let k = m.min(n);
    let top = (0..k).map(|i| s[i]).fold(0.0, f64::max);
    let cut = RANK_TOL * top;
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]));
    let mut sigma = Vec::with_capacity(k);
    let mut kept = Vec::new();
    for &i in &order {
        if top > 0.0 && s[i] > cut {
            sigma.push(s[i]);
            kept.push(i);
        } else {
            sigma.push(0.0);
        }
    }
    let rank = kept.len();
    let (u, v) = (svd.U(), svd.V());
    let image = DMatrix::from_fn(m, rank, |r, c| u[(r, kept[c])]);
    let coimage = DMatrix::from_fn(n, rank, |r, c| v[(r, kept[c])]);
    Decomposition { sigma, image, coimage, rank }
}

fn to_faer(a: &DMatrix<f64>) -> Mat<f64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

/// Orthonormal basis of the orthogonal complement of the span of the
/// orthonormal columns of `basis` inside `R^n`.
pub fn complement(basis: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    debug_assert_eq!(basis.nrows(), n);
    let k = basis.ncols();
    if n == 0 || k >= n {
        return DMatrix::zeros(n, 0);
    }
    if k == 0 {
        return DMatrix::identity(n, n);
    }
    let svd = to_faer(basis).svd().expect("SVD of a finite matrix converges");
    let u = svd.U();
    DMatrix::from_fn(n, n - k, |r, c| u[(r, k + c)])
}

/// Orthonormal basis of `ker a`.
pub fn kernel(a: &DMatrix<f64>) -> DMatrix<f64> {
    let d = decompose(a);
    complement(&d.coimage, a.ncols())
}

/// Moore–Penrose pseudoinverse with the shared rank cutoff.
pub fn pseudo_inverse(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (m, n) = a.shape();
    let d = decompose(a);
    let mut out = DMatrix::zeros(n, m);
    for k in 0..d.rank {
        out += d.coimage.column(k) * d.image.column(k).transpose() / d.sigma[k];
    }
    out
}

/// Spectral norm.
pub fn norm(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    to_faer(a)
        .singular_values()
        .expect("SVD of a finite matrix converges")
        .into_iter()
        .fold(0.0, f64::max)
}

/// Stacks `a` over `b` (same column count).
pub fn vstack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.ncols(), b.ncols());
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), 0), b.shape()).copy_from(b);
    out
}

/// Block diagonal `diag(a, b)`.
pub fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    block(a, &DMatrix::zeros(a.nrows(), b.ncols()), &DMatrix::zeros(b.nrows(), a.ncols()), b)
}

/// `[[a, b], [c, d]]`.
pub fn block(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    d: &DMatrix<f64>,
) -> DMatrix<f64> {
    assert_eq!(a.nrows(), b.nrows());
    assert_eq!(c.nrows(), d.nrows());
    assert_eq!(a.ncols(), c.ncols());
    assert_eq!(b.ncols(), d.ncols());
    let (r, k) = a.shape();
    let mut out = DMatrix::zeros(r + c.nrows(), k + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((0, k), b.shape()).copy_from(b);
    out.view_mut((r, 0), c.shape()).copy_from(c);
    out.view_mut((r, k), d.shape()).copy_from(d);
    out
}
