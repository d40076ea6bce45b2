//! Dilation witnesses `(k, V)` certifying `p(y) = V* p(x)^(k) V` for every
//! free polynomial `p`, their verification, and samplers for the hull
//! `DH(x)` of all such `y`.
//!
//! # Semi-invariance
//!
//! Let `X_1, ..., X_d` act on `C^K`, let `V` be an isometry with `P = V V*`,
//! and let `M` be the smallest `X`-invariant subspace containing `ran V`.
//! Put `N = M ⊖ ran V`. Then the compression `T ↦ V* T V` is multiplicative
//! on the algebra generated by the `X_j` if and only if `N` is invariant.
//!
//! *Proof.* Every `X^u V` maps into `M`, so `(I - P) X^u V` maps into `N`
//! and these vectors span `N` as `u` runs over all words. Hence
//!
//! ```text
//! V* X_a X^u V - (V* X_a V)(V* X^u V) = V* X_a (I - P) X^u V
//! ```
//!
//! vanishes for all `a, u` iff `V* X_a N = 0` for all `a`. Given
//! `X_a N ⊆ X_a M ⊆ M = ran V ⊕ N`, that is the same as `X_a N ⊆ N`.
//! Multiplicativity on words gives `V* X^w V = y^w` by induction on length,
//! and linearity extends it to every polynomial. ∎
//!
//! Since `M` is reached from `ran V` in at most `dim N` layers of
//! multiplication, the criterion is finite. [`verify_dilation_structural`]
//! evaluates the coupling `V* X_a (I - P)` on weighted layer generators, so
//! its defect is on the same scale as the word defects of
//! [`verify_dilation_words`].

use nalgebra::{DVector, SVD};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, ISOMETRY_TOL};
use crate::mattuple::MatrixTuple;
use crate::ncalg::{word_values, Caps, Word};

/// Residual threshold, relative to the coordinate norm, for a Krylov step to
/// add a new direction.
pub const KRYLOV_TOL: f64 = 1e-10;

/// Certificate that `y = V* x^(k) V` lies in the dilation hull of `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DilationWitness {
    pub k: usize,
    #[serde(rename = "V", with = "crate::json::matrix")]
    pub v: CMat,
}

impl DilationWitness {
    /// Validated witness: `k >= 1` and `V` an isometry.
    pub fn new(k: usize, v: CMat) -> Result<Self> {
        let w = Self::unchecked(k, v)?;
        let defect = linalg::isometry_defect(&w.v);
        if defect > ISOMETRY_TOL {
            return Err(Error::NotIsometry { defect });
        }
        Ok(w)
    }

    /// Shape checks only; used for candidate and corrupted witnesses.
    pub fn unchecked(k: usize, v: CMat) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("witness needs k >= 1".into()));
        }
        if v.ncols() == 0 || v.nrows() < v.ncols() || !v.nrows().is_multiple_of(k) {
            return Err(Error::Shape(format!("witness V is {}x{} with k = {k}", v.nrows(), v.ncols())));
        }
        Ok(DilationWitness { k, v })
    }

    pub fn identity(m: usize) -> Self {
        DilationWitness { k: 1, v: CMat::identity(m, m) }
    }

    /// Inclusion of the coordinate block `[offset, offset + size)` of `C^total`.
    pub fn block_inclusion(total: usize, offset: usize, size: usize) -> Result<Self> {
        if size == 0 || offset + size > total {
            return Err(Error::Shape(format!("block [{offset}, {}) outside C^{total}", offset + size)));
        }
        let mut v = CMat::zeros(total, size);
        for i in 0..size {
            v[(offset + i, i)] = Complex64::new(1.0, 0.0);
        }
        Ok(DilationWitness { k: 1, v })
    }

    /// Level of the dilated point.
    pub fn level(&self) -> usize {
        self.v.ncols()
    }

    /// `(I_{k2} (x) V1) V2` with `k = k1 k2`: if `self` takes `x` to `y` and
    /// `next` takes `y` to `z`, the result takes `x` to `z`.
    pub fn compose(&self, next: &DilationWitness) -> Result<Self> {
        if next.v.nrows() != next.k * self.level() {
            return Err(Error::Shape(format!(
                "cannot compose: next witness expects level {}, this one produces {}",
                next.v.nrows() / next.k,
                self.level()
            )));
        }
        let blocks: Vec<&CMat> = std::iter::repeat_n(&self.v, next.k).collect();
        let v = linalg::block_diag(&blocks) * &next.v;
        Ok(DilationWitness { k: self.k * next.k, v })
    }

    fn check_base(&self, x: &MatrixTuple) -> Result<()> {
        if self.v.nrows() != self.k * x.level() {
            return Err(Error::Shape(format!(
                "witness V has {} rows, expected k * level = {}",
                self.v.nrows(),
                self.k * x.level()
            )));
        }
        Ok(())
    }
}

/// `y_j = V* x_j^(k) V`.
pub fn compress_witness(x: &MatrixTuple, w: &DilationWitness) -> Result<MatrixTuple> {
    w.check_base(x)?;
    x.ampliate(w.k)?.compress(&w.v)
}

/// Outcome of [`verify_dilation_words`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WordsVerdict {
    pub ok: bool,
    /// Word with the largest normalized defect.
    pub worst_word: Word,
    /// `max_w |w(y) - V* w(x)^(k) V| / growth(w)`.
    pub defect: f64,
}

/// `growth(w) = max(1, max_j |x_j|)^len(w)`, a bound on `|w(x)|`.
fn growth_base(x: &MatrixTuple) -> f64 {
    x.max_norm().max(1.0)
}

/// `sum_b V_b* T V_b` over the `k` row blocks of `V`, i.e. `V* T^(k) V`.
fn compress_ampliated(t: &CMat, v: &CMat, k: usize) -> CMat {
    let m = t.nrows();
    let n = v.ncols();
    let mut out = CMat::zeros(n, n);
    for b in 0..k {
        let vb = v.rows(b * m, m);
        out += vb.adjoint() * t * vb;
    }
    out
}

/// Checks `w(y) = V* w(x)^(k) V` on every word of length `<= degree`,
/// each within `tol * growth(w)`. The unit word checks `V* V = I`.
pub fn verify_dilation_words(
    y: &MatrixTuple,
    x: &MatrixTuple,
    w: &DilationWitness,
    degree: usize,
    tol: f64,
) -> Result<WordsVerdict> {
    w.check_base(x)?;
    if y.level() != w.level() || y.d() != x.d() {
        return Err(Error::Shape(format!(
            "y is {} x level {}, witness needs {} x level {}",
            y.d(),
            y.level(),
            x.d(),
            w.level()
        )));
    }
    let caps = Caps { max_degree: degree, max_words: usize::MAX };
    let (words, xs) = word_values(x, degree, caps)?;
    let (_, ys) = word_values(y, degree, caps)?;
    let g = growth_base(x);
    let mut worst = (0usize, 0.0f64);
    for (i, (xw, yw)) in xs.iter().zip(&ys).enumerate() {
        let diff = yw - compress_ampliated(xw, &w.v, w.k);
        let defect = linalg::spectral_norm_unchecked(&diff) / g.powi(words[i].len() as i32);
        if !defect.is_finite() {
            worst = (i, f64::INFINITY);
            break;
        }
        if defect > worst.1 {
            worst = (i, defect);
        }
    }
    Ok(WordsVerdict { ok: worst.1 <= tol, worst_word: words[worst.0].clone(), defect: worst.1 })
}

/// Outcome of [`verify_dilation_structural`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructuralVerdict {
    pub ok: bool,
    /// `|V* V - I|`.
    pub isometry_defect: f64,
    /// `max_j |y_j - V* X_j V| / max(1, |x|)`.
    pub compression_defect: f64,
    /// Largest coupling `|V* X_a (I - P) G|` over weighted layer generators `G`
    /// of `N`; zero exactly when `N` is invariant.
    pub invariance_defect: f64,
    /// `max_a |(I - N N*) X_a N| / (1 + |X|)` in an orthonormal basis of `N`;
    /// a scale-free diagnostic, not part of the verdict.
    pub nesting_defect: f64,
    /// `(dim M, dim N)`.
    pub subspace_dims: (usize, usize),
}

impl StructuralVerdict {
    /// Largest of the three defects that enter the verdict.
    pub fn defect(&self) -> f64 {
        self.isometry_defect.max(self.compression_defect).max(self.invariance_defect)
    }
}

/// Exact verification through semi-invariance of `ran V` for the algebra
/// generated by the `X_j = x_j^(k)`; it agrees with the word check at every
/// degree.
pub fn verify_dilation_structural(
    y: &MatrixTuple,
    x: &MatrixTuple,
    w: &DilationWitness,
    tol: f64,
) -> Result<StructuralVerdict> {
    w.check_base(x)?;
    if y.level() != w.level() || y.d() != x.d() {
        return Err(Error::Shape("y does not match the witness".into()));
    }
    let v = &w.v;
    let big = x.ampliate(w.k)?;
    let g = growth_base(x);
    let isometry_defect = linalg::isometry_defect(v);
    let vh = v.adjoint();
    let compression_defect = big
        .mats()
        .iter()
        .zip(y.mats())
        .map(|(xj, yj)| linalg::spectral_norm_unchecked(&(yj - &vh * xj * v)))
        .fold(0.0, f64::max)
        / g;

    let m_basis = krylov_invariant_subspace(&big, v);
    let dim_m = m_basis.ncols();
    let n = v.ncols();
    // V* M has rank n (ran V lies in M and V is close to an isometry, so its
    // singular values are near 1); the kernel directions give N inside M.
    let dim_n = dim_m.saturating_sub(n);
    let n_basis = if dim_n == 0 {
        CMat::zeros(v.nrows(), 0)
    } else {
        let rr = linalg::rank_revealing(&(&vh * &m_basis), 0.5);
        let kernel = rr.kernel.columns(rr.kernel.ncols() - dim_n, dim_n).into_owned();
        &m_basis * kernel
    };

    let big_norm = big.max_norm();
    let mut nesting_defect: f64 = 0.0;
    if dim_n > 0 {
        let proj_out = CMat::identity(v.nrows(), v.nrows()) - &n_basis * n_basis.adjoint();
        for xa in big.mats() {
            let r = linalg::spectral_norm_unchecked(&(&proj_out * xa * &n_basis));
            nesting_defect = nesting_defect.max(r / (1.0 + big_norm));
        }
    }

    // Layer generators: F_0 = V and F_{l+1} a Gram square root of
    // (1 / (d g^2)) sum_j X_j F_l F_l* X_j*, so that F_l F_l* averages
    // X^u V V* X^u* / g^{2l} over the words u of length l.
    let d = x.d();
    let p_out = CMat::identity(v.nrows(), v.nrows()) - v * &vh;
    let scale = Complex64::new(1.0 / (g * (d as f64).sqrt()), 0.0);
    let mut layer = v.clone();
    let mut invariance_defect: f64 = 0.0;
    for _ in 0..dim_n {
        let mut stacked = CMat::zeros(v.nrows(), layer.ncols() * d);
        for (j, xj) in big.mats().iter().enumerate() {
            stacked.columns_mut(j * layer.ncols(), layer.ncols()).copy_from(&(xj * &layer * scale));
        }
        layer = gram_root(stacked);
        let reach = &p_out * &layer;
        for xa in big.mats() {
            let c = linalg::spectral_norm_unchecked(&(&vh * xa * &reach)) / g;
            invariance_defect = invariance_defect.max(c);
        }
    }

    let defects = [isometry_defect, compression_defect, invariance_defect];
    let ok = defects.iter().all(|e| e.is_finite() && *e <= tol);
    Ok(StructuralVerdict {
        ok,
        isometry_defect,
        compression_defect,
        invariance_defect,
        nesting_defect,
        subspace_dims: (dim_m, dim_n),
    })
}

/// `U S` from a thin SVD of `z`, a matrix with at most `rows` columns and the
/// same Gram matrix `z z*`.
fn gram_root(z: CMat) -> CMat {
    if z.ncols() <= z.nrows() {
        return z;
    }
    let svd = SVD::new(z, true, false);
    let mut u = svd.u.expect("u requested");
    for (j, s) in svd.singular_values.iter().enumerate() {
        u.column_mut(j).scale_mut(*s);
    }
    u
}

/// Orthonormal basis of the smallest subspace containing the columns of
/// `seeds` and invariant under every `x_j`.
///
/// Breadth-first: each basis vector is pushed through every coordinate and
/// the result is kept when its residual against the current basis exceeds
/// `KRYLOV_TOL * |x_j|`.
pub fn krylov_invariant_subspace(x: &MatrixTuple, seeds: &CMat) -> CMat {
    let n = x.level();
    let norms: Vec<f64> = x.mats().iter().map(linalg::spectral_norm_unchecked).collect();
    let mut basis: Vec<DVector<Complex64>> = Vec::new();
    let seed_scale = (0..seeds.ncols()).map(|j| seeds.column(j).norm()).fold(0.0, f64::max);
    for j in 0..seeds.ncols() {
        push_direction(&mut basis, seeds.column(j).into_owned(), KRYLOV_TOL * seed_scale);
    }
    let mut next = 0;
    while next < basis.len() && basis.len() < n {
        let q = basis[next].clone();
        next += 1;
        for (xj, nj) in x.mats().iter().zip(&norms) {
            push_direction(&mut basis, xj * &q, KRYLOV_TOL * nj);
            if basis.len() == n {
                break;
            }
        }
    }
    linalg::columns_to_matrix(n, &basis)
}

/// Adds the normalized residual of `v` to `basis` when it exceeds `threshold`.
fn push_direction(basis: &mut Vec<DVector<Complex64>>, mut v: DVector<Complex64>, threshold: f64) {
    if v.norm() <= threshold {
        return;
    }
    for _ in 0..2 {
        for q in basis.iter() {
            let c = q.dotc(&v);
            v.axpy(-c, q, Complex64::new(1.0, 0.0));
        }
    }
    let r = v.norm();
    if r > threshold && r > 0.0 {
        basis.push(v / Complex64::new(r, 0.0));
    }
}

/// How a hull sample was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HullStrategy {
    /// `k = 1`, `V` a random unitary.
    Unitary,
    /// One coordinate block of `x^(k)`.
    Summand,
    /// A random invariant subspace `M` of `x^(k)`, times a unitary.
    Krylov,
    /// `M ⊖ N` for nested invariant subspaces `N ⊂ M`, times a unitary.
    Quotient,
    /// Cycle through the four strategies above.
    Mix,
}

impl HullStrategy {
    const CYCLE: [HullStrategy; 4] =
        [HullStrategy::Unitary, HullStrategy::Summand, HullStrategy::Krylov, HullStrategy::Quotient];
}

/// Default size limits for hull samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HullCaps {
    pub max_k: usize,
    pub max_dim: usize,
}

impl Default for HullCaps {
    fn default() -> Self {
        HullCaps { max_k: 4, max_dim: 64 }
    }
}

/// A certified point of the hull.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HullSample {
    pub tuple: MatrixTuple,
    pub witness: DilationWitness,
    pub strategy: HullStrategy,
}

/// `count` hull points of `x` with witnesses, deterministic per seed.
///
/// Krylov and quotient draws that come out trivial (zero or full
/// dimension) fall back to unitary conjugation.
pub fn sample_hull(x: &MatrixTuple, count: usize, seed: u64, strategy: HullStrategy) -> Result<Vec<HullSample>> {
    sample_hull_with(x, count, strategy, HullCaps::default(), &mut linalg::rng_from_seed(seed))
}

pub fn sample_hull_with<R: Rng + ?Sized>(
    x: &MatrixTuple,
    count: usize,
    strategy: HullStrategy,
    caps: HullCaps,
    rng: &mut R,
) -> Result<Vec<HullSample>> {
    if count == 0 {
        return Err(Error::InvalidArgument("hull sample count must be >= 1".into()));
    }
    let m = x.level();
    if m > caps.max_dim {
        return Err(Error::InvalidArgument(format!("base level {m} exceeds the dimension cap {}", caps.max_dim)));
    }
    let k_max = caps.max_k.min(caps.max_dim / m).max(1);
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let s = match strategy {
            HullStrategy::Mix => HullStrategy::CYCLE[i % 4],
            s => s,
        };
        let (witness, used) = draw_witness(x, s, k_max, rng)?;
        let tuple = compress_witness(x, &witness)?;
        out.push(HullSample { tuple, witness, strategy: used });
    }
    Ok(out)
}

fn draw_witness<R: Rng + ?Sized>(
    x: &MatrixTuple,
    strategy: HullStrategy,
    k_max: usize,
    rng: &mut R,
) -> Result<(DilationWitness, HullStrategy)> {
    let m = x.level();
    let unitary = |rng: &mut R| DilationWitness::new(1, linalg::gaussian_isometry(m, m, rng));
    match strategy {
        HullStrategy::Unitary | HullStrategy::Mix => Ok((unitary(rng)?, HullStrategy::Unitary)),
        HullStrategy::Summand => {
            let k = rng.random_range(1..=k_max);
            let b = rng.random_range(0..k);
            let inc = DilationWitness::block_inclusion(k * m, b * m, m)?;
            Ok((DilationWitness::new(k, inc.v)?, HullStrategy::Summand))
        }
        HullStrategy::Krylov => {
            let k = rng.random_range(1..=k_max);
            let big = x.ampliate(k)?;
            let seeds = linalg::gaussian_matrix(k * m, rng.random_range(1..=k), rng);
            let basis = krylov_invariant_subspace(&big, &seeds);
            let dim = basis.ncols();
            if dim == 0 || (k == 1 && dim == m) {
                return Ok((unitary(rng)?, HullStrategy::Unitary));
            }
            let v = basis * linalg::gaussian_isometry(dim, dim, rng);
            Ok((DilationWitness::new(k, v)?, HullStrategy::Krylov))
        }
        HullStrategy::Quotient => {
            let k = rng.random_range(1..=k_max);
            let big = x.ampliate(k)?;
            let inner_seeds = linalg::gaussian_matrix(k * m, 1, rng);
            let extra = linalg::gaussian_matrix(k * m, rng.random_range(1..=k), rng);
            let inner = krylov_invariant_subspace(&big, &inner_seeds);
            let mut all = CMat::zeros(k * m, 1 + extra.ncols());
            all.columns_mut(0, 1).copy_from(&inner_seeds);
            all.columns_mut(1, extra.ncols()).copy_from(&extra);
            let outer = krylov_invariant_subspace(&big, &all);
            let q = outer.ncols().saturating_sub(inner.ncols());
            if inner.ncols() == 0 || q == 0 {
                return Ok((unitary(rng)?, HullStrategy::Unitary));
            }
            // M ⊖ N: the part of the outer basis orthogonal to the inner one.
            let rr = linalg::rank_revealing(&(inner.adjoint() * &outer), 0.5);
            let kernel = rr.kernel.columns(rr.kernel.ncols() - q, q).into_owned();
            let v = &outer * kernel * linalg::gaussian_isometry(q, q, rng);
            Ok((DilationWitness::new(k, v)?, HullStrategy::Quotient))
        }
    }
}

/// Kinds of deliberate witness corruption used as negative controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Corruption {
    /// `V + eps G / |G|`, no longer an isometry.
    OffIsometry,
    /// Re-orthonormalized `V + eps G / |G|`: still an isometry, but its
    /// range is generically not semi-invariant.
    OffSemiInvariance,
}

/// Standard corruption sizes.
pub const CORRUPTION_EPS: [f64; 3] = [1e-6, 1e-3, 1e-1];

/// Perturbs a witness of `x` and returns the matching compressed point
/// `V'* x^(k) V'` with the perturbed witness.
pub fn corrupt_witness<R: Rng + ?Sized>(
    x: &MatrixTuple,
    w: &DilationWitness,
    kind: Corruption,
    eps: f64,
    rng: &mut R,
) -> Result<(MatrixTuple, DilationWitness)> {
    w.check_base(x)?;
    let g = linalg::gaussian_matrix(w.v.nrows(), w.v.ncols(), rng);
    let g_norm = linalg::spectral_norm(&g)?;
    let mut v = &w.v + g * Complex64::new(eps / g_norm, 0.0);
    if kind == Corruption::OffSemiInvariance {
        v = linalg::orthonormal_columns(&v, 1e-12);
        if v.ncols() != w.v.ncols() {
            return Err(Error::Singular { rcond: 0.0 });
        }
    }
    let big = x.ampliate(w.k)?;
    let vh = v.adjoint();
    let y = big.map(|m| &vh * m * &v)?;
    Ok((y, DilationWitness::unchecked(w.k, v)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, rng_from_seed};
    use crate::mattuple::random_tuple;

    fn real(rows: usize, data: &[f64]) -> CMat {
        CMat::from_row_slice(rows, data.len() / rows, &data.iter().map(|&v| c64(v, 0.0)).collect::<Vec<_>>())
    }

    fn jordan() -> MatrixTuple {
        MatrixTuple::new(vec![real(2, &[0.0, 1.0, 0.0, 0.0])]).unwrap()
    }

    #[test]
    fn identity_and_unitary_witness() {
        let x = random_tuple(3, 2, 1.0, 1).unwrap();
        let id = DilationWitness::identity(3);
        let y = compress_witness(&x, &id).unwrap();
        assert_eq!(y, x);
        let wv = verify_dilation_words(&y, &x, &id, 6, 1e-12).unwrap();
        assert!(wv.ok);
        assert_eq!(wv.defect, 0.0);
        let sv = verify_dilation_structural(&y, &x, &id, 1e-12).unwrap();
        assert!(sv.ok);
        assert_eq!(sv.subspace_dims, (3, 0));

        let u = linalg::random_unitary(3, 2).unwrap();
        let w = DilationWitness::new(1, u.clone()).unwrap();
        let y = compress_witness(&x, &w).unwrap();
        assert!((y.coord(0) - u.adjoint() * x.coord(0) * &u).norm() < 1e-14);
    }

    #[test]
    fn summand_of_direct_sum() {
        let x = random_tuple(2, 2, 1.0, 3).unwrap();
        let b = random_tuple(3, 2, 1.0, 4).unwrap();
        let s = x.direct_sum(&b).unwrap();
        let wx = DilationWitness::block_inclusion(5, 0, 2).unwrap();
        let wb = DilationWitness::block_inclusion(5, 2, 3).unwrap();
        assert_eq!(compress_witness(&s, &wx).unwrap(), x);
        assert_eq!(compress_witness(&s, &wb).unwrap(), b);
        assert!(verify_dilation_structural(&b, &s, &wb, 1e-12).unwrap().ok);
    }

    #[test]
    fn jordan_corner_is_a_dilation() {
        let x = jordan();
        let w = DilationWitness::new(1, real(2, &[1.0, 0.0])).unwrap();
        let y = compress_witness(&x, &w).unwrap();
        assert_eq!(y.coord(0)[(0, 0)], c64(0.0, 0.0));
        assert!(verify_dilation_words(&y, &x, &w, 8, 1e-12).unwrap().ok);
        let sv = verify_dilation_structural(&y, &x, &w, 1e-12).unwrap();
        assert!(sv.ok);
        assert_eq!(sv.subspace_dims, (1, 0));
    }

    #[test]
    fn jordan_diagonal_vector_fails_at_square() {
        let x = jordan();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let w = DilationWitness::new(1, real(2, &[h, h])).unwrap();
        let y = compress_witness(&x, &w).unwrap();
        assert!((y.coord(0)[(0, 0)] - c64(0.5, 0.0)).norm() < 1e-15);
        // degree 1 alone cannot see the failure
        assert!(verify_dilation_words(&y, &x, &w, 1, 1e-12).unwrap().ok);
        let wv = verify_dilation_words(&y, &x, &w, 2, 1e-12).unwrap();
        assert!(!wv.ok);
        assert_eq!(wv.worst_word, Word::new(vec![1, 1], 1).unwrap());
        assert!((wv.defect - 0.25).abs() < 1e-14);

        let sv = verify_dilation_structural(&y, &x, &w, 1e-9).unwrap();
        assert!(!sv.ok);
        assert_eq!(sv.subspace_dims, (2, 1));
        assert!(sv.nesting_defect > 0.1);
    }

    #[test]
    fn krylov_examples() {
        let x = jordan();
        let e2 = real(2, &[0.0, 1.0]);
        assert_eq!(krylov_invariant_subspace(&x, &e2).ncols(), 2);
        let e1 = real(2, &[1.0, 0.0]);
        assert_eq!(krylov_invariant_subspace(&x, &e1).ncols(), 1);

        let diag = MatrixTuple::new(vec![real(3, &[1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 3.0])]).unwrap();
        let basis = krylov_invariant_subspace(&diag, &real(3, &[1.0, 0.0, 0.0]));
        assert_eq!(basis.ncols(), 1);
        assert!((basis[(0, 0)].norm() - 1.0).abs() < 1e-15);

        let full = krylov_invariant_subspace(&random_tuple(4, 2, 1.0, 5).unwrap(), &CMat::identity(4, 4));
        assert_eq!(full.ncols(), 4);
    }

    #[test]
    fn composition_of_witnesses() {
        let mut rng = rng_from_seed(11);
        let x = random_tuple(2, 2, 0.8, 6).unwrap();
        for _ in 0..5 {
            let first = sample_hull_with(&x, 1, HullStrategy::Quotient, HullCaps::default(), &mut rng).unwrap();
            let y = &first[0].tuple;
            let second = sample_hull_with(y, 1, HullStrategy::Krylov, HullCaps { max_k: 3, max_dim: 64 }, &mut rng).unwrap();
            let z = &second[0].tuple;
            let w = first[0].witness.compose(&second[0].witness).unwrap();
            assert!(linalg::isometry_defect(&w.v) < 1e-12);
            let z2 = compress_witness(&x, &w).unwrap();
            assert!((z2.coord(0) - z.coord(0)).norm() < 1e-12);
            assert!(verify_dilation_structural(z, &x, &w, 1e-9).unwrap().ok);
        }
    }

    #[test]
    fn sampler_outputs_are_certified() {
        let x = random_tuple(2, 2, 0.9, 8).unwrap();
        let samples = sample_hull(&x, 24, 3, HullStrategy::Mix).unwrap();
        for s in &samples {
            let v = verify_dilation_structural(&s.tuple, &x, &s.witness, 1e-9).unwrap();
            assert!(v.ok, "{:?} {:?}", s.strategy, v);
            assert!(s.witness.k * x.level() <= 64 && s.witness.k <= 4);
        }
        assert_eq!(samples, sample_hull(&x, 24, 3, HullStrategy::Mix).unwrap());
        // the summand strategy with a block of x^(2) gives x back
        let w = DilationWitness::new(2, DilationWitness::block_inclusion(4, 2, 2).unwrap().v).unwrap();
        assert_eq!(compress_witness(&x, &w).unwrap(), x);
    }

    #[test]
    fn unitary_samples_preserve_spectra() {
        let x = random_tuple(3, 1, 1.0, 9).unwrap();
        let eig = |m: &CMat| {
            let mut e: Vec<f64> = m.clone().eigenvalues().unwrap().iter().map(|z| z.norm()).collect();
            e.sort_by(f64::total_cmp);
            e
        };
        for s in sample_hull(&x, 3, 1, HullStrategy::Unitary).unwrap() {
            for (a, b) in eig(s.tuple.coord(0)).iter().zip(eig(x.coord(0)).iter()) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn corrupted_witnesses_fail_both_checks() {
        let mut rng = rng_from_seed(12);
        let x = random_tuple(2, 2, 0.9, 10).unwrap();
        let base = sample_hull(&x, 4, 2, HullStrategy::Krylov).unwrap();
        for s in &base {
            for &eps in &CORRUPTION_EPS {
                let (y, w) = corrupt_witness(&x, &s.witness, Corruption::OffIsometry, eps, &mut rng).unwrap();
                assert!(!verify_dilation_structural(&y, &x, &w, 1e-9).unwrap().ok);
                assert!(!verify_dilation_words(&y, &x, &w, 0, 1e-9).unwrap().ok);
            }
        }
    }

    #[test]
    fn reducing_perturbation_is_second_order() {
        // A perturbed summand of x^(2) leaks out of the reducing block at
        // O(eps), while compressed products only move at O(eps^2).
        let mut rng = rng_from_seed(13);
        let x = random_tuple(2, 2, 0.9, 14).unwrap();
        let w = DilationWitness::new(2, DilationWitness::block_inclusion(4, 0, 2).unwrap().v).unwrap();
        for (eps, expect_ok) in [(1e-6, true), (1e-3, false)] {
            let (y, wc) = corrupt_witness(&x, &w, Corruption::OffSemiInvariance, eps, &mut rng).unwrap();
            let words = verify_dilation_words(&y, &x, &wc, 6, 1e-9).unwrap();
            let st = verify_dilation_structural(&y, &x, &wc, 1e-9).unwrap();
            assert_eq!(words.ok, expect_ok, "{words:?}");
            assert_eq!(st.ok, expect_ok, "{st:?}");
            assert!(st.nesting_defect > eps * 1e-2);
        }
    }

    #[test]
    fn witness_json() {
        let w = DilationWitness::new(2, DilationWitness::block_inclusion(2, 1, 1).unwrap().v).unwrap();
        let s = serde_json::to_string(&w).unwrap();
        assert_eq!(s, r#"{"k":2,"V":[[[0.0,0.0]],[[1.0,0.0]]]}"#);
        let back: DilationWitness = serde_json::from_str(&s).unwrap();
        assert_eq!(back, w);
        assert!(DilationWitness::new(1, real(2, &[1.0, 1.0])).is_err());
        assert!(DilationWitness::unchecked(3, CMat::identity(2, 2)).is_err());
    }
}
