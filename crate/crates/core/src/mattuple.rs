//! Points of the nc space: `d`-tuples of `n x n` complex matrices, with the
//! structural operations the rest of the crate is built from.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, ISOMETRY_TOL};

pub use crate::linalg::{random_isometry, random_unitary, spectral_norm};

/// A point `x = (x_1, ..., x_d)` at level `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TupleRepr", into = "TupleRepr")]
pub struct MatrixTuple {
    level: usize,
    mats: Vec<CMat>,
}

#[derive(Serialize, Deserialize)]
struct TupleRepr {
    level: usize,
    d: usize,
    #[serde(with = "crate::json::matrices")]
    mats: Vec<CMat>,
}

impl TryFrom<TupleRepr> for MatrixTuple {
    type Error = Error;

    fn try_from(r: TupleRepr) -> Result<Self> {
        if r.mats.len() != r.d {
            return Err(Error::Shape(format!("d = {} but {} matrices given", r.d, r.mats.len())));
        }
        let t = MatrixTuple::new(r.mats)?;
        if t.level != r.level {
            return Err(Error::Shape(format!("level = {} but matrices are {}", r.level, t.level)));
        }
        Ok(t)
    }
}

impl From<MatrixTuple> for TupleRepr {
    fn from(t: MatrixTuple) -> Self {
        TupleRepr { level: t.level, d: t.mats.len(), mats: t.mats }
    }
}

/// Outcome of an intertwining check `alpha x = y alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intertwining {
    pub holds: bool,
    pub defect: f64,
}

impl MatrixTuple {
    /// Builds a tuple from `d >= 1` square matrices of one common size `n >= 1`.
    pub fn new(mats: Vec<CMat>) -> Result<Self> {
        let first = mats.first().ok_or_else(|| Error::Shape("tuple needs d >= 1".into()))?;
        let n = first.nrows();
        if n == 0 {
            return Err(Error::Shape("tuple needs level >= 1".into()));
        }
        for (j, m) in mats.iter().enumerate() {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::Shape(format!(
                    "coordinate {} is {}x{}, expected {n}x{n}",
                    j + 1,
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        Ok(MatrixTuple { level: n, mats })
    }

    /// Level-1 tuple of scalars.
    pub fn scalars(values: &[Complex64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| CMat::from_element(1, 1, v)).collect())
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn d(&self) -> usize {
        self.mats.len()
    }

    pub fn mats(&self) -> &[CMat] {
        &self.mats
    }

    /// Coordinate `j`, zero-based.
    pub fn coord(&self, j: usize) -> &CMat {
        &self.mats[j]
    }

    pub fn into_mats(self) -> Vec<CMat> {
        self.mats
    }

    /// `max_j |x_j|` in spectral norm.
    pub fn max_norm(&self) -> f64 {
        self.mats.iter().map(linalg::spectral_norm_unchecked).fold(0.0, f64::max)
    }

    pub fn scale(&self, t: Complex64) -> MatrixTuple {
        MatrixTuple {
            level: self.level,
            mats: self.mats.iter().map(|m| m * t).collect(),
        }
    }

    pub fn map<F: FnMut(&CMat) -> CMat>(&self, f: F) -> Result<MatrixTuple> {
        MatrixTuple::new(self.mats.iter().map(f).collect())
    }

    fn require_same_d(&self, other: &MatrixTuple) -> Result<()> {
        if self.d() != other.d() {
            return Err(Error::AlphabetMismatch { left: self.d(), right: other.d() });
        }
        Ok(())
    }

    /// `x (+) y`: coordinate-wise block diagonal at level `n + m`.
    pub fn direct_sum(&self, other: &MatrixTuple) -> Result<MatrixTuple> {
        self.require_same_d(other)?;
        let mats = self
            .mats
            .iter()
            .zip(&other.mats)
            .map(|(a, b)| linalg::block_diag(&[a, b]))
            .collect();
        Ok(MatrixTuple { level: self.level + other.level, mats })
    }

    /// `x^(k)`: direct sum of `k` copies.
    pub fn ampliate(&self, k: usize) -> Result<MatrixTuple> {
        if k == 0 {
            return Err(Error::InvalidArgument("ampliation multiplicity must be >= 1".into()));
        }
        if k == 1 {
            return Ok(self.clone());
        }
        let mats = self
            .mats
            .iter()
            .map(|m| {
                let blocks: Vec<&CMat> = std::iter::repeat_n(m, k).collect();
                linalg::block_diag(&blocks)
            })
            .collect();
        Ok(MatrixTuple { level: self.level * k, mats })
    }

    /// Similarity `S x_j S^{-1}` coordinate-wise.
    pub fn conjugate(&self, s: &CMat) -> Result<MatrixTuple> {
        if s.nrows() != self.level || s.ncols() != self.level {
            return Err(Error::Shape(format!(
                "similarity is {}x{}, level is {}",
                s.nrows(),
                s.ncols(),
                self.level
            )));
        }
        let cond = linalg::condition_number(s);
        if !cond.is_finite() || 1.0 / cond < 1e-14 {
            return Err(Error::Singular { rcond: 1.0 / cond });
        }
        if cond > 1e8 {
            log::warn!("similarity has condition number {cond:e}");
        }
        let inv = s.clone().try_inverse().ok_or(Error::Singular { rcond: 0.0 })?;
        self.map(|m| s * m * &inv)
    }

    /// Checks `alpha x_j = y_j alpha` for all `j`, where `self = x`.
    ///
    /// Holds iff `max_j |alpha x_j - y_j alpha| <= tol (1 + |alpha| max_j |x_j|)`.
    pub fn check_intertwine(&self, y: &MatrixTuple, alpha: &CMat, tol: f64) -> Result<Intertwining> {
        self.require_same_d(y)?;
        if alpha.nrows() != y.level || alpha.ncols() != self.level {
            return Err(Error::Shape(format!(
                "intertwiner is {}x{}, expected {}x{}",
                alpha.nrows(),
                alpha.ncols(),
                y.level,
                self.level
            )));
        }
        let defect = self
            .mats
            .iter()
            .zip(&y.mats)
            .map(|(x, y)| linalg::spectral_norm_unchecked(&(alpha * x - y * alpha)))
            .fold(0.0, f64::max);
        let bound = tol * (1.0 + linalg::spectral_norm_unchecked(alpha) * self.max_norm());
        Ok(Intertwining { holds: defect <= bound, defect })
    }

    /// `V* x_j V` coordinate-wise for an isometry `V: C^small -> C^level`.
    pub fn compress(&self, v: &CMat) -> Result<MatrixTuple> {
        if v.nrows() != self.level || v.ncols() == 0 {
            return Err(Error::Shape(format!(
                "isometry is {}x{}, level is {}",
                v.nrows(),
                v.ncols(),
                self.level
            )));
        }
        let defect = linalg::isometry_defect(v);
        if defect > ISOMETRY_TOL {
            return Err(Error::NotIsometry { defect });
        }
        let vh = v.adjoint();
        self.map(|m| &vh * m * v)
    }
}

/// Random tuple with i.i.d. complex Gaussian entries, rescaled so that
/// `max_j |x_j| <= scale`. Deterministic per seed.
pub fn random_tuple(n: usize, d: usize, scale: f64, seed: u64) -> Result<MatrixTuple> {
    random_tuple_with(n, d, scale, &mut linalg::rng_from_seed(seed))
}

pub fn random_tuple_with<R: Rng + ?Sized>(n: usize, d: usize, scale: f64, rng: &mut R) -> Result<MatrixTuple> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidArgument("random tuple needs n, d >= 1".into()));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidArgument(format!("scale must be positive, got {scale}")));
    }
    let raw = MatrixTuple::new((0..d).map(|_| linalg::gaussian_matrix(n, n, rng)).collect())?;
    let max = raw.max_norm();
    let factor = scale / max * (1.0 - 4.0 * f64::EPSILON);
    Ok(raw.scale(Complex64::new(factor, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;

    fn real(rows: usize, data: &[f64]) -> CMat {
        CMat::from_row_slice(rows, data.len() / rows, &data.iter().map(|&v| c64(v, 0.0)).collect::<Vec<_>>())
    }

    #[test]
    fn new_rejects_bad_shapes() {
        assert!(MatrixTuple::new(vec![]).is_err());
        assert!(MatrixTuple::new(vec![CMat::zeros(2, 2), CMat::zeros(3, 3)]).is_err());
        assert!(MatrixTuple::new(vec![CMat::zeros(2, 3)]).is_err());
        assert!(MatrixTuple::new(vec![CMat::zeros(0, 0)]).is_err());
    }

    #[test]
    fn direct_sum_block_pattern() {
        let x = random_tuple(1, 2, 1.0, 1).unwrap();
        let y = random_tuple(2, 2, 1.0, 2).unwrap();
        let s = x.direct_sum(&y).unwrap();
        assert_eq!(s.level(), 3);
        for j in 0..2 {
            let m = s.coord(j);
            assert_eq!(m[(0, 0)], x.coord(j)[(0, 0)]);
            assert_eq!(m.view((1, 1), (2, 2)), y.coord(j).view((0, 0), (2, 2)));
            assert_eq!(m[(0, 1)], c64(0.0, 0.0));
            assert_eq!(m[(2, 0)], c64(0.0, 0.0));
        }
        assert!(x.direct_sum(&random_tuple(1, 3, 1.0, 0).unwrap()).is_err());
    }

    #[test]
    fn ampliation_matches_repeated_direct_sum() {
        let x = random_tuple(2, 2, 1.0, 3).unwrap();
        assert_eq!(x.ampliate(1).unwrap(), x);
        assert_eq!(x.ampliate(2).unwrap(), x.direct_sum(&x).unwrap());
        let x3 = x.ampliate(3).unwrap();
        assert_eq!(x3.level(), 6);
        assert_eq!(x3, x.direct_sum(&x).unwrap().direct_sum(&x).unwrap());
        assert!(x.ampliate(0).is_err());
    }

    #[test]
    fn direct_sum_associative() {
        let a = random_tuple(1, 2, 1.0, 4).unwrap();
        let b = random_tuple(2, 2, 1.0, 5).unwrap();
        let c = random_tuple(3, 2, 1.0, 6).unwrap();
        let left = a.direct_sum(&b).unwrap().direct_sum(&c).unwrap();
        let right = a.direct_sum(&b.direct_sum(&c).unwrap()).unwrap();
        assert_eq!(left, right);
    }

    #[test]
    fn conjugate_identity_and_unitary() {
        let x = random_tuple(3, 2, 1.0, 7).unwrap();
        let same = x.conjugate(&CMat::identity(3, 3)).unwrap();
        for j in 0..2 {
            assert!((same.coord(j) - x.coord(j)).norm() < 1e-15);
        }
        let u = random_unitary(3, 8).unwrap();
        let y = x.conjugate(&u).unwrap();
        for j in 0..2 {
            let a = spectral_norm(x.coord(j)).unwrap();
            let b = spectral_norm(y.coord(j)).unwrap();
            assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn conjugate_rejects_singular() {
        let x = random_tuple(2, 1, 1.0, 9).unwrap();
        let s = real(2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(x.conjugate(&s), Err(Error::Singular { .. })));
        assert!(matches!(x.conjugate(&CMat::identity(3, 3)), Err(Error::Shape(_))));
    }

    #[test]
    fn intertwining_examples() {
        let a = random_tuple(2, 2, 1.0, 10).unwrap();
        let b = random_tuple(1, 2, 1.0, 11).unwrap();
        let id = a.check_intertwine(&a, &CMat::identity(2, 2), 1e-12).unwrap();
        assert!(id.holds);
        assert_eq!(id.defect, 0.0);

        // [I 0] maps a (+) b onto a.
        let x = a.direct_sum(&b).unwrap();
        let mut proj = CMat::zeros(2, 3);
        proj[(0, 0)] = c64(1.0, 0.0);
        proj[(1, 1)] = c64(1.0, 0.0);
        assert!(x.check_intertwine(&a, &proj, 1e-12).unwrap().holds);

        // Independent random data: residual computed directly.
        let y = random_tuple(2, 2, 1.0, 12).unwrap();
        let alpha = crate::linalg::gaussian_matrix(2, 2, &mut crate::linalg::rng_from_seed(13));
        let r = a.check_intertwine(&y, &alpha, 1e-12).unwrap();
        let direct = (0..2)
            .map(|j| spectral_norm(&(&alpha * a.coord(j) - y.coord(j) * &alpha)).unwrap())
            .fold(0.0, f64::max);
        assert!(!r.holds);
        assert!((r.defect - direct).abs() < 1e-14);
        assert!(a.check_intertwine(&y, &CMat::zeros(3, 2), 1e-12).is_err());
    }

    #[test]
    fn compress_examples() {
        let x = random_tuple(2, 2, 1.0, 14).unwrap();
        assert_eq!(x.compress(&CMat::identity(2, 2)).unwrap(), x);

        let b = random_tuple(3, 2, 1.0, 15).unwrap();
        let mut inc = CMat::zeros(5, 2);
        inc[(0, 0)] = c64(1.0, 0.0);
        inc[(1, 1)] = c64(1.0, 0.0);
        assert_eq!(x.direct_sum(&b).unwrap().compress(&inc).unwrap(), x);

        // V = (e1 + e2)/sqrt 2 on the Jordan block: V* J V = 1/2.
        let j = MatrixTuple::new(vec![real(2, &[0.0, 1.0, 0.0, 0.0])]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v = real(2, &[h, h]);
        let y = j.compress(&v).unwrap();
        assert!((y.coord(0)[(0, 0)] - c64(0.5, 0.0)).norm() < 1e-15);

        assert!(matches!(j.compress(&real(2, &[1.0, 1.0])), Err(Error::NotIsometry { .. })));
    }

    #[test]
    fn compress_of_ampliation_with_first_block() {
        let x = random_tuple(2, 3, 1.0, 16).unwrap();
        let mut v = CMat::zeros(6, 2);
        v[(0, 0)] = c64(1.0, 0.0);
        v[(1, 1)] = c64(1.0, 0.0);
        assert_eq!(x.ampliate(3).unwrap().compress(&v).unwrap(), x);
    }

    #[test]
    fn random_tuple_contract() {
        let x = random_tuple(3, 2, 0.5, 17).unwrap();
        assert!(x.max_norm() <= 0.5);
        assert_eq!(x, random_tuple(3, 2, 0.5, 17).unwrap());
        assert!(random_tuple(0, 2, 0.5, 1).is_err());
        assert!(random_tuple(2, 2, -1.0, 1).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let x = random_tuple(2, 2, 1.0, 18).unwrap();
        let s = serde_json::to_string(&x).unwrap();
        assert!(s.starts_with("{\"level\":2,\"d\":2,\"mats\":[[[["));
        let back: MatrixTuple = serde_json::from_str(&s).unwrap();
        assert_eq!(back, x);
        let bad = r#"{"level":2,"d":1,"mats":[[[[1,0]]]]}"#;
        assert!(serde_json::from_str::<MatrixTuple>(bad).is_err());
    }
}
