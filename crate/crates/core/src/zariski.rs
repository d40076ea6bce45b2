//! Truncated vanishing ideals of a matrix point, Zariski-closure membership
//! and exact point interpolation by word-evaluation linear algebra.
//!
//! For a base point `lambda` at level `n` and a degree cutoff `D`, the
//! evaluation matrix `E` has one column per word of length `<= D`: the
//! row-major vectorization of `w(lambda)`. Its kernel is the coefficient space
//! of the ideal `{p : p(lambda) = 0}` truncated at degree `D`, and its column
//! span is the evaluation space `{p(lambda) : deg p <= D}`.
//!
//! Rank decisions use singular-value thresholding with the absolute tolerance
//! `1e-10 * sigma_max * max(n^2, W)` unless a tolerance is supplied.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::mattuple::MatrixTuple;
use crate::ncalg::{word_values, Caps, FreePolynomial, Word};

/// Relative factor in the default rank tolerance.
pub const RANK_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct EvaluationMatrix {
    base: MatrixTuple,
    degree: usize,
    words: Vec<Word>,
    e: CMat,
}

fn stack_columns(n: usize, values: &[CMat]) -> CMat {
    let mut e = CMat::zeros(n * n, values.len());
    for (k, v) in values.iter().enumerate() {
        for (idx, z) in linalg::vec_row_major(v).into_iter().enumerate() {
            e[(idx, k)] = z;
        }
    }
    e
}

impl EvaluationMatrix {
    pub fn new(base: &MatrixTuple, degree: usize) -> Result<Self> {
        Self::with_caps(base, degree, Caps::default())
    }

    pub fn with_caps(base: &MatrixTuple, degree: usize, caps: Caps) -> Result<Self> {
        let (words, values) = word_values(base, degree, caps)?;
        let e = stack_columns(base.level(), &values);
        Ok(EvaluationMatrix { base: base.clone(), degree, words, e })
    }

    pub fn base(&self) -> &MatrixTuple {
        &self.base
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    /// The `n^2 x W` matrix.
    pub fn matrix(&self) -> &CMat {
        &self.e
    }

    pub fn default_rank_tol(&self) -> f64 {
        let smax = linalg::spectral_norm_unchecked(&self.e);
        let (rows, cols) = self.e.shape();
        RANK_REL_TOL * smax * rows.max(cols) as f64
    }

    pub fn rank(&self, tol: Option<f64>) -> usize {
        let tol = tol.unwrap_or_else(|| self.default_rank_tol());
        linalg::rank_revealing(&self.e, tol).rank
    }

    /// Polynomial with the given coefficient vector over this matrix's words.
    pub fn assemble(&self, coeffs: &[Complex64]) -> Result<FreePolynomial> {
        FreePolynomial::from_terms(self.base.d(), self.words.iter().cloned().zip(coeffs.iter().copied()))
    }

    /// Coefficient vector of `p` over this matrix's words, or `None` if `p`
    /// has a term of higher degree.
    pub fn coefficients_of(&self, p: &FreePolynomial) -> Option<Vec<Complex64>> {
        if p.degree().unwrap_or(0) > self.degree {
            return None;
        }
        Some(self.words.iter().map(|w| p.coefficient(w)).collect())
    }
}

/// Orthonormal (in coefficient space) basis of the truncated ideal.
#[derive(Debug, Clone)]
pub struct IdealBasis {
    eval: EvaluationMatrix,
    kernel: CMat,
    polys: Vec<FreePolynomial>,
    rank_tol: f64,
    rank: usize,
}

impl IdealBasis {
    pub fn new(base: &MatrixTuple, degree: usize, rank_tol: Option<f64>) -> Result<Self> {
        let eval = EvaluationMatrix::new(base, degree)?;
        Self::from_evaluation(eval, rank_tol)
    }

    pub fn from_evaluation(eval: EvaluationMatrix, rank_tol: Option<f64>) -> Result<Self> {
        let rank_tol = rank_tol.unwrap_or_else(|| eval.default_rank_tol());
        let rr = linalg::rank_revealing(eval.matrix(), rank_tol);
        let polys = (0..rr.kernel.ncols())
            .map(|k| {
                let col: Vec<Complex64> = rr.kernel.column(k).iter().copied().collect();
                eval.assemble(&col)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(IdealBasis { eval, kernel: rr.kernel, polys, rank_tol, rank: rr.rank })
    }

    pub fn base(&self) -> &MatrixTuple {
        self.eval.base()
    }

    pub fn degree(&self) -> usize {
        self.eval.degree()
    }

    pub fn polys(&self) -> &[FreePolynomial] {
        &self.polys
    }

    pub fn rank_tol(&self) -> f64 {
        self.rank_tol
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.polys.len()
    }

    /// `W x K` matrix whose columns are the basis coefficient vectors.
    pub fn kernel(&self) -> &CMat {
        &self.kernel
    }

    /// Relative distance of `p` from the span of the basis, in coefficient
    /// space; `None` if `p` exceeds the degree cutoff.
    pub fn span_residual(&self, p: &FreePolynomial) -> Option<f64> {
        let c = self.eval.coefficients_of(p)?;
        let c = nalgebra::DVector::from_vec(c);
        let norm = c.norm();
        if norm == 0.0 {
            return Some(0.0);
        }
        let proj = &self.kernel * (self.kernel.adjoint() * &c);
        Some((c - proj).norm() / norm)
    }

    /// Largest normalized value `|p(x)| / (1 + |coeffs| max_j |x_j|^deg p)`
    /// over the basis.
    pub fn max_defect(&self, x: &MatrixTuple) -> Result<f64> {
        if x.d() != self.base().d() {
            return Err(Error::AlphabetMismatch { left: self.base().d(), right: x.d() });
        }
        if self.polys.is_empty() {
            return Ok(0.0);
        }
        let (_, values) = word_values(x, self.degree(), Caps { max_degree: usize::MAX, max_words: usize::MAX })?;
        let ex = stack_columns(x.level(), &values);
        let images = ex * &self.kernel;
        let n = x.level();
        let growth_base = x.max_norm();
        let mut worst: f64 = 0.0;
        for (k, p) in self.polys.iter().enumerate() {
            let mut m = CMat::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] = images[(i * n + j, k)];
                }
            }
            let deg = p.degree().unwrap_or(0) as i32;
            let scale = 1.0 + p.coeff_norm() * growth_base.powi(deg);
            worst = worst.max(linalg::spectral_norm_unchecked(&m) / scale);
        }
        Ok(worst)
    }
}

/// Outcome of [`stabilization_degree`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stabilization {
    /// Smallest `D` with `rank(E_D) = rank(E_{D+1})`.
    pub degree: usize,
    /// `rank(E_0), ..., rank(E_{degree+1})`.
    pub ranks: Vec<usize>,
}

/// Smallest degree at which the evaluation span at `base` stops growing.
/// Once adding one letter adds nothing, the span is closed under
/// multiplication by every coordinate and hence equals the whole evaluation
/// algebra. `cap` defaults to `n^2 + 1`.
pub fn stabilization_degree(base: &MatrixTuple, cap: Option<usize>) -> Result<Stabilization> {
    let n = base.level();
    let cap = cap.unwrap_or(n * n + 1);
    let mut ranks = Vec::new();
    for degree in 0..=cap + 1 {
        let e = match EvaluationMatrix::new(base, degree) {
            Ok(e) => e,
            Err(Error::WordCap { .. }) => return Err(Error::StabilizationCap { cap, ranks }),
            Err(e) => return Err(e),
        };
        ranks.push(e.rank(None));
        if degree >= 1 && ranks[degree] == ranks[degree - 1] {
            return Ok(Stabilization { degree: degree - 1, ranks });
        }
    }
    Err(Error::StabilizationCap { cap, ranks })
}

/// Verdict of [`in_zariski`], valid up to the degree cutoff it carries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZariskiVerdict {
    pub member: bool,
    pub max_defect: f64,
    pub degree: usize,
}

/// Whether `x` is annihilated (to `tol`) by the ideal of `base` truncated at `degree`.
pub fn in_zariski(base: &MatrixTuple, x: &MatrixTuple, degree: usize, tol: f64) -> Result<ZariskiVerdict> {
    let basis = IdealBasis::new(base, degree, None)?;
    in_zariski_with(&basis, x, tol)
}

pub fn in_zariski_with(basis: &IdealBasis, x: &MatrixTuple, tol: f64) -> Result<ZariskiVerdict> {
    let max_defect = basis.max_defect(x)?;
    Ok(ZariskiVerdict { member: max_defect <= tol, max_defect, degree: basis.degree() })
}

/// A polynomial matching a target value at the base point.
#[derive(Debug, Clone)]
pub struct Interpolant {
    pub poly: FreePolynomial,
    /// `|E c - vec(target)|`.
    pub residual: f64,
    pub degree: usize,
}

/// Minimal-norm least-squares polynomial `p` of degree `<= degree` with
/// `p(base) ~ target`.
pub fn interpolate(target: &CMat, base: &MatrixTuple, degree: usize) -> Result<Interpolant> {
    let eval = EvaluationMatrix::new(base, degree)?;
    interpolate_with(target, &eval, None)
}

pub fn interpolate_with(target: &CMat, eval: &EvaluationMatrix, rank_tol: Option<f64>) -> Result<Interpolant> {
    let n = eval.base().level();
    if target.shape() != (n, n) {
        return Err(Error::Shape(format!("target is {:?}, base level is {n}", target.shape())));
    }
    let tol = rank_tol.unwrap_or_else(|| eval.default_rank_tol());
    let b = CMat::from_column_slice(n * n, 1, &linalg::vec_row_major(target));
    let c = linalg::min_norm_lstsq(eval.matrix(), &b, tol);
    let residual = (eval.matrix() * &c - b).norm();
    let coeffs: Vec<Complex64> = c.column(0).iter().copied().collect();
    Ok(Interpolant { poly: eval.assemble(&coeffs)?, residual, degree: eval.degree() })
}

/// JSON export of an ideal basis.
#[derive(Debug, Clone, Serialize)]
pub struct IdealExport {
    pub schema: u32,
    pub base: MatrixTuple,
    pub degree: usize,
    pub rank_tol: f64,
    pub ranks_per_degree: Vec<usize>,
    pub polys: Vec<String>,
}

impl IdealBasis {
    pub fn export(&self) -> IdealExport {
        let ranks_per_degree = (0..=self.degree())
            .map(|deg| {
                EvaluationMatrix::new(self.base(), deg)
                    .map(|e| e.rank(Some(self.rank_tol)))
                    .unwrap_or(0)
            })
            .collect();
        IdealExport {
            schema: 1,
            base: self.base().clone(),
            degree: self.degree(),
            rank_tol: self.rank_tol,
            ranks_per_degree,
            polys: self.polys.iter().map(|p| p.to_string()).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;
    use crate::mattuple::random_tuple;
    use crate::ncalg::parse_poly;

    fn jordan(n: usize) -> MatrixTuple {
        let mut j = CMat::zeros(n, n);
        for i in 0..n - 1 {
            j[(i, i + 1)] = c64(1.0, 0.0);
        }
        MatrixTuple::new(vec![j]).unwrap()
    }

    fn diag_pair() -> MatrixTuple {
        let diag = |a: f64, b: f64| CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c64(a, 0.0), c64(b, 0.0)]));
        MatrixTuple::new(vec![diag(1.0, 2.0), diag(3.0, 4.0)]).unwrap()
    }

    #[test]
    fn evaluation_matrix_at_zero() {
        let z = MatrixTuple::scalars(&[c64(0.0, 0.0)]).unwrap();
        let e = EvaluationMatrix::new(&z, 2).unwrap();
        let expect = CMat::from_row_slice(1, 3, &[c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)]);
        assert_eq!(e.matrix(), &expect);
    }

    #[test]
    fn evaluation_matrix_scalar_powers_and_unit_column() {
        let t = c64(0.7, -0.2);
        let z = MatrixTuple::scalars(&[t]).unwrap();
        let e = EvaluationMatrix::new(&z, 4).unwrap();
        for l in 0..=4 {
            assert!((e.matrix()[(0, l)] - t.powu(l as u32)).norm() < 1e-15);
        }
        let x = random_tuple(3, 2, 1.0, 1).unwrap();
        let e = EvaluationMatrix::new(&x, 3).unwrap();
        let unit: Vec<Complex64> = linalg::vec_row_major(&CMat::identity(3, 3));
        assert_eq!(e.matrix().column(0).iter().copied().collect::<Vec<_>>(), unit);
        assert!(e.rank(None) <= 9.min(e.words().len()));
        // columns agree with direct polynomial evaluation
        for (k, w) in e.words().iter().enumerate() {
            let p = FreePolynomial::from_terms(2, [(w.clone(), c64(1.0, 0.0))]).unwrap();
            let direct = linalg::vec_row_major(&p.eval(&x).unwrap());
            for (i, v) in direct.iter().enumerate() {
                assert!((e.matrix()[(i, k)] - v).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn ideal_of_zero() {
        let z = MatrixTuple::scalars(&[c64(0.0, 0.0)]).unwrap();
        let basis = IdealBasis::new(&z, 2, None).unwrap();
        assert_eq!(basis.dim(), 2);
        for p in ["x1", "x1^2", "x1 - 3*x1^2"] {
            let poly = parse_poly(p, 1).unwrap();
            assert!(basis.span_residual(&poly).unwrap() < 1e-12, "{p}");
        }
        assert!(basis.span_residual(&parse_poly("1 + x1", 1).unwrap()).unwrap() > 0.5);
    }

    #[test]
    fn commutator_in_ideal_of_commuting_pair() {
        let basis = IdealBasis::new(&diag_pair(), 2, None).unwrap();
        let comm = parse_poly("x1*x2 - x2*x1", 2).unwrap();
        assert!(basis.span_residual(&comm).unwrap() <= 1e-10);
        for p in basis.polys() {
            assert!(linalg::spectral_norm(&p.eval(&diag_pair()).unwrap()).unwrap() <= 10.0 * basis.rank_tol());
        }
    }

    #[test]
    fn trivial_kernel() {
        // words {1, x1} at a scalar t != 0 via level-2 Jordan: E is 4x2 of rank 2
        let basis = IdealBasis::new(&jordan(2), 1, None).unwrap();
        assert_eq!(basis.dim(), 0);
        assert_eq!(basis.max_defect(&jordan(2)).unwrap(), 0.0);
    }

    #[test]
    fn jordan_stabilization() {
        for n in 2..=4 {
            let st = stabilization_degree(&jordan(n), None).unwrap();
            assert_eq!(st.degree, n - 1, "n={n}: {:?}", st.ranks);
            assert_eq!(st.ranks, (1..=n).chain([n]).collect::<Vec<_>>());
        }
    }

    #[test]
    fn scalar_stabilization() {
        for t in [0.0, 0.5, -2.0] {
            let z = MatrixTuple::scalars(&[c64(t, 0.0), c64(1.0, 1.0)]).unwrap();
            let st = stabilization_degree(&z, None).unwrap();
            assert!(st.degree <= 1);
        }
    }

    #[test]
    fn stabilization_bounded_by_level_squared() {
        for seed in 0..5 {
            let x = random_tuple(2, 2, 1.0, seed).unwrap();
            let st = stabilization_degree(&x, None).unwrap();
            assert!(st.degree <= 4);
            assert!(st.ranks.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn zariski_examples() {
        let lam = random_tuple(2, 2, 1.0, 7).unwrap();
        let d = stabilization_degree(&lam, None).unwrap().degree;
        let v = in_zariski(&lam, &lam, d, 1e-8).unwrap();
        assert!(v.member);
        let v2 = in_zariski(&lam, &lam.ampliate(2).unwrap(), d, 1e-8).unwrap();
        assert!(v2.member);

        let zero = MatrixTuple::scalars(&[c64(0.0, 0.0)]).unwrap();
        let one = MatrixTuple::scalars(&[c64(1.0, 0.0)]).unwrap();
        let v3 = in_zariski(&zero, &one, 2, 1e-8).unwrap();
        assert!(!v3.member);
        assert!(v3.max_defect > 0.1);
    }

    #[test]
    fn interpolation_examples() {
        let lam = random_tuple(2, 2, 1.0, 8).unwrap();
        // At degree 0 the unit word is the only candidate.
        let id0 = interpolate(&CMat::identity(2, 2), &lam, 0).unwrap();
        assert!(id0.residual < 1e-12);
        assert!((id0.poly.coefficient(&Word::unit()) - c64(1.0, 0.0)).norm() < 1e-14);
        assert_eq!(id0.poly.num_terms(), 1);
        // Higher degrees: the minimal-norm interpolant spreads over ideal
        // directions with a constant term, but still reproduces I.
        let id = interpolate(&CMat::identity(2, 2), &lam, 2).unwrap();
        assert!(id.residual < 1e-12);
        assert!((id.poly.eval(&lam).unwrap() - CMat::identity(2, 2)).norm() < 1e-12);

        let q = parse_poly("(0.3-1i)*x1*x2 + 2*x2 - 0.5 + x2*x1", 2).unwrap();
        let target = q.eval(&lam).unwrap();
        let fit = interpolate(&target, &lam, 2).unwrap();
        assert!(fit.residual <= 1e-10);
        assert!((fit.poly.eval(&lam).unwrap() - target).norm() <= 1e-10);
    }

    #[test]
    fn export_lists_ranks() {
        let basis = IdealBasis::new(&jordan(3), 3, None).unwrap();
        let ex = basis.export();
        assert_eq!(ex.ranks_per_degree, vec![1, 2, 3, 3]);
        assert_eq!(ex.polys.len(), 1);
        let back = parse_poly(&ex.polys[0], 1).unwrap();
        assert!(basis.span_residual(&back).unwrap() < 1e-12);
    }
}
