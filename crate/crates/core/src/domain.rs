//! Basic free open sets `D_Q = { z : |Q(z)| < 1 }` for a matrix `Q` of
//! free polynomials.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::mattuple::{random_tuple_with, MatrixTuple};
use crate::ncalg::{parse_poly, FreePolynomial};

/// An `s x r` matrix of free polynomials over a common alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QRepr", into = "QRepr")]
pub struct MatrixPolyQ {
    s: usize,
    r: usize,
    d: usize,
    /// Row-major.
    entries: Vec<FreePolynomial>,
}

#[derive(Serialize, Deserialize)]
struct QRepr {
    s: usize,
    r: usize,
    d: usize,
    entries: Vec<Vec<String>>,
}

impl TryFrom<QRepr> for MatrixPolyQ {
    type Error = Error;

    fn try_from(q: QRepr) -> Result<Self> {
        if q.entries.len() != q.s || q.entries.iter().any(|row| row.len() != q.r) {
            return Err(Error::Shape(format!("entries do not form a {}x{} grid", q.s, q.r)));
        }
        let polys = q
            .entries
            .iter()
            .flatten()
            .map(|t| parse_poly(t, q.d))
            .collect::<Result<Vec<_>>>()?;
        MatrixPolyQ::new(q.s, q.r, polys)
    }
}

impl From<MatrixPolyQ> for QRepr {
    fn from(q: MatrixPolyQ) -> Self {
        let entries = (0..q.s)
            .map(|i| (0..q.r).map(|j| q.entry(i, j).to_string()).collect())
            .collect();
        QRepr { s: q.s, r: q.r, d: q.d, entries }
    }
}

/// Result of a membership test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Membership {
    pub member: bool,
    pub norm: f64,
}

impl MatrixPolyQ {
    /// `entries` is row-major, of length `s * r`, all over one alphabet.
    pub fn new(s: usize, r: usize, entries: Vec<FreePolynomial>) -> Result<Self> {
        if s == 0 || r == 0 {
            return Err(Error::Shape("Q needs s, r >= 1".into()));
        }
        if entries.len() != s * r {
            return Err(Error::Shape(format!("{} entries for a {s}x{r} Q", entries.len())));
        }
        let d = entries[0].d();
        if let Some(p) = entries.iter().find(|p| p.d() != d) {
            return Err(Error::AlphabetMismatch { left: d, right: p.d() });
        }
        Ok(MatrixPolyQ { s, r, d, entries })
    }

    /// Parses a grid of polynomial strings.
    pub fn parse(rows: &[&[&str]], d: usize) -> Result<Self> {
        let s = rows.len();
        let r = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != r) {
            return Err(Error::Shape("ragged Q".into()));
        }
        let entries = rows
            .iter()
            .flat_map(|row| row.iter())
            .map(|t| parse_poly(t, d))
            .collect::<Result<Vec<_>>>()?;
        Self::new(s, r, entries)
    }

    /// The row `[x1 x2 ... xd]`, whose domain is the row ball.
    pub fn row_ball(d: usize) -> Self {
        let entries = (1..=d as u32).map(|j| FreePolynomial::var(d, j).expect("j <= d")).collect();
        Self::new(1, d, entries).expect("nonempty")
    }

    /// The column `[x1; ...; xd]`, whose domain is the column ball.
    pub fn column_ball(d: usize) -> Self {
        let entries = (1..=d as u32).map(|j| FreePolynomial::var(d, j).expect("j <= d")).collect();
        Self::new(d, 1, entries).expect("nonempty")
    }

    /// `diag(x1, ..., xd)`, whose domain is the polydisk.
    pub fn polydisk(d: usize) -> Self {
        let mut entries = vec![FreePolynomial::zero(d); d * d];
        for j in 0..d {
            entries[j * d + j] = FreePolynomial::var(d, j as u32 + 1).expect("j <= d");
        }
        Self::new(d, d, entries).expect("nonempty")
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn entry(&self, i: usize, j: usize) -> &FreePolynomial {
        &self.entries[i * self.r + j]
    }

    /// Largest entry degree; 0 when every entry is zero.
    pub fn degree(&self) -> usize {
        self.entries.iter().filter_map(FreePolynomial::degree).max().unwrap_or(0)
    }

    /// `Q(z)`: the `(s n) x (r n)` block matrix whose `(i, j)` block is `q_ij(z)`.
    pub fn eval(&self, z: &MatrixTuple) -> Result<CMat> {
        if z.d() != self.d {
            return Err(Error::AlphabetMismatch { left: self.d, right: z.d() });
        }
        let n = z.level();
        let mut out = CMat::zeros(self.s * n, self.r * n);
        for i in 0..self.s {
            for j in 0..self.r {
                let p = self.entry(i, j);
                if p.is_zero() {
                    continue;
                }
                out.view_mut((i * n, j * n), (n, n)).copy_from(&p.eval(z)?);
            }
        }
        Ok(out)
    }

    /// `|Q(z)|` and whether it is at most `1 - margin`; with `margin = 0`
    /// the boundary `|Q(z)| = 1` is excluded.
    pub fn contains(&self, z: &MatrixTuple, margin: f64) -> Result<Membership> {
        let norm = linalg::spectral_norm(&self.eval(z)?)?;
        let member = if margin > 0.0 { norm <= 1.0 - margin } else { norm < 1.0 };
        Ok(Membership { member, norm })
    }

    /// Random point of `D_Q` at the given level with `|Q(z)| <= 1 - margin`.
    ///
    /// A Gaussian direction is drawn at a random radius in `(0, 1]` and
    /// shrunk geometrically until it lands in the domain.
    pub fn sample_point<R: Rng + ?Sized>(&self, level: usize, margin: f64, rng: &mut R) -> Result<MatrixTuple> {
        let bound = 1.0 - margin;
        if !(0.0..1.0).contains(&margin) {
            return Err(Error::InvalidArgument(format!("margin must lie in [0, 1), got {margin}")));
        }
        let shrink = Complex64::new(0.8, 0.0);
        for _ in 0..64 {
            let radius = 1.0 - rng.random::<f64>();
            let mut z = random_tuple_with(level, self.d, radius, rng)?;
            for _ in 0..200 {
                let m = self.contains(&z, 0.0)?;
                if m.norm <= bound && m.norm < 1.0 {
                    return Ok(z);
                }
                z = z.scale(shrink);
            }
        }
        Err(Error::InvalidArgument("could not sample a point of D_Q; |Q(0)| may be >= 1".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, random_unitary, rng_from_seed};
    use crate::mattuple::random_tuple;

    #[test]
    fn scalar_q() {
        let q = MatrixPolyQ::parse(&[&["x1"]], 1).unwrap();
        let z = MatrixTuple::scalars(&[c64(0.5, 0.0)]).unwrap();
        assert_eq!(q.eval(&z).unwrap(), CMat::from_element(1, 1, c64(0.5, 0.0)));
        let m = q.contains(&z, 0.0).unwrap();
        assert!(m.member);
        assert!((m.norm - 0.5).abs() < 1e-15);
        let one = MatrixTuple::scalars(&[c64(1.0, 0.0)]).unwrap();
        assert!(!q.contains(&one, 0.0).unwrap().member);
    }

    #[test]
    fn row_layout() {
        let q = MatrixPolyQ::row_ball(2);
        let z = random_tuple(3, 2, 1.0, 1).unwrap();
        let qz = q.eval(&z).unwrap();
        assert_eq!(qz.shape(), (3, 6));
        assert_eq!(qz.view((0, 0), (3, 3)), z.coord(0).view((0, 0), (3, 3)));
        assert_eq!(qz.view((0, 3), (3, 3)), z.coord(1).view((0, 0), (3, 3)));
    }

    #[test]
    fn commutator_q_vanishes_on_commuting() {
        let q = MatrixPolyQ::parse(&[&["x1*x2 - x2*x1"]], 2).unwrap();
        let diag = |a: f64, b: f64| CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c64(a, 0.0), c64(b, 0.0)]));
        let z = MatrixTuple::new(vec![diag(1.0, 2.0), diag(3.0, 4.0)]).unwrap();
        assert_eq!(q.eval(&z).unwrap(), CMat::zeros(2, 2));
    }

    #[test]
    fn direct_sum_membership_is_max() {
        let q = MatrixPolyQ::parse(&[&["x1", "0.5*x1*x2"], &["x2 + 0.1", "0"]], 2).unwrap();
        let mut rng = rng_from_seed(2);
        for _ in 0..10 {
            let a = q.sample_point(2, 0.05, &mut rng).unwrap();
            let b = q.sample_point(1, 0.05, &mut rng).unwrap();
            let (ma, mb) = (q.contains(&a, 0.0).unwrap(), q.contains(&b, 0.0).unwrap());
            assert!(ma.member && mb.member);
            let ms = q.contains(&a.direct_sum(&b).unwrap(), 0.0).unwrap();
            assert!(ms.member);
            assert!((ms.norm - ma.norm.max(mb.norm)).abs() <= 1e-12);
        }
    }

    #[test]
    fn homogeneous_scaling_and_unitary_invariance() {
        let q = MatrixPolyQ::parse(&[&["x1", "(0.5+1i)*x2"], &["0", "x1 - x2"]], 2).unwrap();
        let z = random_tuple(3, 2, 0.3, 3).unwrap();
        let base = q.contains(&z, 0.0).unwrap().norm;
        let t = c64(-0.7, 1.1);
        let scaled = q.contains(&z.scale(t), 0.0).unwrap().norm;
        assert!((scaled - t.norm() * base).abs() <= 1e-10);

        let u = random_unitary(3, 4).unwrap();
        let zu = z.conjugate(&u).unwrap();
        let mu = q.contains(&zu, 0.0).unwrap();
        assert!((mu.norm - base).abs() <= 1e-10);
        assert_eq!(mu.member, q.contains(&z, 0.0).unwrap().member);
    }

    #[test]
    fn margin_and_sampler() {
        let q = MatrixPolyQ::polydisk(2);
        let mut rng = rng_from_seed(5);
        for level in 1..=4 {
            let z = q.sample_point(level, 0.05, &mut rng).unwrap();
            assert!(q.contains(&z, 0.05).unwrap().member);
        }
        // constant term of norm 2 leaves D_Q empty
        let bad = MatrixPolyQ::parse(&[&["2 + x1"]], 1).unwrap();
        assert!(bad.sample_point(1, 0.0, &mut rng).is_err());
    }

    #[test]
    fn json_shape() {
        let q = MatrixPolyQ::row_ball(2);
        let s = serde_json::to_string(&q).unwrap();
        assert_eq!(s, r#"{"s":1,"r":2,"d":2,"entries":[["(1+0i)*x1","(1+0i)*x2"]]}"#);
        let back: MatrixPolyQ = serde_json::from_str(&s).unwrap();
        assert_eq!(back, q);
        assert!(serde_json::from_str::<MatrixPolyQ>(r#"{"s":2,"r":2,"d":2,"entries":[["x1","x2"]]}"#).is_err());
        assert!(MatrixPolyQ::new(1, 2, vec![FreePolynomial::one(1), FreePolynomial::one(2)]).is_err());
    }
}
