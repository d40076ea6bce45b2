//! Dense complex matrix helpers shared by every module.
//!
//! All matrices are `nalgebra::DMatrix<Complex64>`. Indexing is `(row, col)`;
//! "row-major" in the JSON encodings and in `vec` refers to the semantic order
//! of entries, not to nalgebra's column-major storage.

use nalgebra::{DMatrix, SVD};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;

/// Isometry tolerance on `|V*V - I|` (spectral norm, absolute).
pub const ISOMETRY_TOL: f64 = 1e-10;

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn is_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Largest singular value of `m`.
///
/// The zero-sized matrix has norm 0.
pub fn spectral_norm(m: &CMat) -> Result<f64> {
    if !is_finite(m) {
        return Err(Error::NonFinite);
    }
    Ok(spectral_norm_unchecked(m))
}

pub(crate) fn spectral_norm_unchecked(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    if m.nrows() == 1 || m.ncols() == 1 {
        return m.norm();
    }
    let svd = SVD::new(m.clone(), false, false);
    svd.singular_values.iter().cloned().fold(0.0, f64::max)
}

pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    SVD::new(m.clone(), false, false)
        .singular_values
        .iter()
        .cloned()
        .collect()
}

/// `|V*V - I|` in spectral norm.
pub fn isometry_defect(v: &CMat) -> f64 {
    let g = v.adjoint() * v - CMat::identity(v.ncols(), v.ncols());
    spectral_norm_unchecked(&g)
}

/// Condition number `sigma_max / sigma_min` of a square matrix (infinite when singular).
pub fn condition_number(m: &CMat) -> f64 {
    let sv = singular_values(m);
    let max = sv.first().copied().unwrap_or(0.0);
    let min = sv.last().copied().unwrap_or(0.0);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Block diagonal matrix with the given square or rectangular blocks.
pub fn block_diag(blocks: &[&CMat]) -> CMat {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(*b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Row-major vectorization: entry `(i, j)` lands at `i * ncols + j`.
pub fn vec_row_major(m: &CMat) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Orthonormal basis for the span of the columns of `cols`, in order.
///
/// Classical Gram-Schmidt with one reorthogonalization pass; a column is
/// kept only when its residual exceeds `threshold` times its original norm.
pub fn orthonormal_columns(cols: &CMat, threshold: f64) -> CMat {
    let mut basis: Vec<nalgebra::DVector<Complex64>> = Vec::new();
    for j in 0..cols.ncols() {
        let v = cols.column(j).into_owned();
        if let Some(q) = orthogonalize_against(&basis, v, threshold) {
            basis.push(q);
        }
    }
    columns_to_matrix(cols.nrows(), &basis)
}

/// Orthogonalizes `v` against an orthonormal `basis`; returns the normalized
/// residual if it is not negligible relative to `|v|`.
pub(crate) fn orthogonalize_against(
    basis: &[nalgebra::DVector<Complex64>],
    mut v: nalgebra::DVector<Complex64>,
    threshold: f64,
) -> Option<nalgebra::DVector<Complex64>> {
    let original = v.norm();
    if original == 0.0 {
        return None;
    }
    for _ in 0..2 {
        for q in basis {
            let coeff = q.dotc(&v);
            v.axpy(-coeff, q, Complex64::new(1.0, 0.0));
        }
    }
    let residual = v.norm();
    if residual <= threshold * original {
        None
    } else {
        Some(v / Complex64::new(residual, 0.0))
    }
}

pub(crate) fn columns_to_matrix(rows: usize, cols: &[nalgebra::DVector<Complex64>]) -> CMat {
    let mut out = CMat::zeros(rows, cols.len());
    for (j, c) in cols.iter().enumerate() {
        out.set_column(j, c);
    }
    out
}

/// Singular value decomposition data for a kernel / least-squares computation.
pub struct RankRevealing {
    pub singular_values: Vec<f64>,
    pub rank: usize,
    /// Orthonormal basis of the kernel, one column per kernel vector.
    pub kernel: CMat,
}

/// Rank and orthonormal kernel basis of `e` under the absolute singular-value
/// threshold `tol`. The matrix is padded with zero rows when it is wide so the
/// full right singular basis is available.
pub fn rank_revealing(e: &CMat, tol: f64) -> RankRevealing {
    let (rows, cols) = e.shape();
    if cols == 0 {
        return RankRevealing {
            singular_values: Vec::new(),
            rank: 0,
            kernel: CMat::zeros(0, 0),
        };
    }
    let padded = if rows < cols {
        let mut p = CMat::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(e);
        p
    } else {
        e.clone()
    };
    let svd = SVD::new(padded, false, true);
    let sv: Vec<f64> = svd.singular_values.iter().cloned().collect();
    let rank = sv.iter().filter(|&&s| s > tol).count();
    let v_t = svd.v_t.expect("right singular vectors requested");
    // sv has length min(rows', cols) == cols, so v_t is cols x cols.
    let mut kernel = CMat::zeros(cols, cols - rank);
    for (k, i) in (rank..cols).enumerate() {
        for j in 0..cols {
            kernel[(j, k)] = v_t[(i, j)].conj();
        }
    }
    RankRevealing {
        singular_values: sv.into_iter().take(rows.min(cols)).collect(),
        rank,
        kernel,
    }
}

/// Minimal-norm least-squares solution of `e c = b`, discarding singular
/// values at or below `tol`.
pub fn min_norm_lstsq(e: &CMat, b: &CMat, tol: f64) -> CMat {
    let (rows, cols) = e.shape();
    if rows == 0 || cols == 0 {
        return CMat::zeros(cols, b.ncols());
    }
    let svd = SVD::new(e.clone(), true, true);
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v requested");
    let utb = u.adjoint() * b;
    let mut scaled = utb.clone();
    for (i, s) in svd.singular_values.iter().enumerate() {
        let factor = if *s > tol { 1.0 / s } else { 0.0 };
        for j in 0..scaled.ncols() {
            scaled[(i, j)] *= factor;
        }
    }
    v_t.adjoint() * scaled
}

pub fn complex_gaussian<R: rand::Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix with i.i.d. standard complex Gaussian entries, filled row by row.
pub fn gaussian_matrix<R: rand::Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    let mut m = CMat::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = complex_gaussian(rng);
        }
    }
    m
}

/// Isometry `C^cols -> C^rows` from orthonormalized Gaussian columns.
pub(crate) fn gaussian_isometry<R: rand::Rng + ?Sized>(
    rows: usize,
    cols: usize,
    rng: &mut R,
) -> CMat {
    loop {
        let g = gaussian_matrix(rows, cols, rng);
        let q = orthonormal_columns(&g, 1e-8);
        if q.ncols() == cols {
            return q;
        }
    }
}

/// Random `n_big x n_small` isometry, deterministic per seed.
pub fn random_isometry(n_big: usize, n_small: usize, seed: u64) -> Result<CMat> {
    if n_small == 0 || n_big < n_small {
        return Err(Error::InvalidArgument(format!(
            "isometry needs n_big >= n_small >= 1, got {n_big} x {n_small}"
        )));
    }
    Ok(gaussian_isometry(n_big, n_small, &mut rng_from_seed(seed)))
}

/// Random `n x n` unitary, deterministic per seed.
pub fn random_unitary(n: usize, seed: u64) -> Result<CMat> {
    random_isometry(n, n, seed)
}

/// Random invertible matrix `U diag(s) W` with singular values spread
/// log-uniformly over `[1, cond]`.
pub fn random_invertible<R: rand::Rng + ?Sized>(n: usize, cond: f64, rng: &mut R) -> CMat {
    let u = gaussian_isometry(n, n, rng);
    let w = gaussian_isometry(n, n, rng);
    let mut s = CMat::zeros(n, n);
    for i in 0..n {
        let t = if n == 1 {
            0.0
        } else if i == 0 {
            1.0
        } else if i == n - 1 {
            0.0
        } else {
            rng.random::<f64>()
        };
        s[(i, i)] = Complex64::new(cond.powf(t), 0.0);
    }
    u * s * w
}
