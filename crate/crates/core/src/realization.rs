//! Finite-dimensional colligations `U = [[A, B], [C, D]]` and their transfer
//! functions on a basic free open set `D_Q`:
//!
//! ```text
//! f(z) = D I_n + C^ (I - Q^(z) A^)^{-1} Q^(z) B^
//! ```
//!
//! Index convention: the lifted spaces are indexed by triples `(i, p, a)`
//! with block index `i`, auxiliary index `p in [m]` and level index `a in [n]`,
//! flattened as `(i * m + p) * n + a`. With this order
//! `A^ = A (x) I_n`, `B^ = B (x) I_n`, `C^ = C (x) I_n`, and
//! `Q^(z)[(i,p,a),(j,q,b)] = delta_pq [q_ij(z)]_ab`.

use nalgebra::LU;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::MatrixPolyQ;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::mattuple::MatrixTuple;
use crate::ncalg::{count_words_up_to, Caps, FreePolynomial};

/// Slack allowed on `|U| <= 1` and on `|U*U - I|` for unitary colligations.
pub const CONTRACTIVE_TOL: f64 = 1e-10;
/// Slack on the Schur-Agler bound `|f(z)| <= 1`.
pub const SCHUR_TOL: f64 = 1e-9;
/// Norm of randomly generated contractive colligations.
pub const CONTRACTIVE_NORM: f64 = 0.95;
/// Reciprocal pivot ratio below which the resolvent solve is rejected.
const RCOND_MIN: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Unitary,
    Contractive,
}

/// A contractive block operator `U: C^{s m} (+) C -> C^{r m} (+) C`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ColligationRepr", into = "ColligationRepr")]
pub struct Colligation {
    s: usize,
    r: usize,
    m: usize,
    a: CMat,
    b: CMat,
    c: CMat,
    d: Complex64,
    mode: Mode,
    norm: f64,
}

#[derive(Serialize, Deserialize)]
struct ColligationRepr {
    s: usize,
    r: usize,
    m: usize,
    #[serde(rename = "A", with = "crate::json::matrix")]
    a: CMat,
    #[serde(rename = "B", with = "crate::json::matrix")]
    b: CMat,
    #[serde(rename = "C", with = "crate::json::matrix")]
    c: CMat,
    #[serde(rename = "D", with = "crate::json::matrix")]
    d: CMat,
    mode: Mode,
}

impl TryFrom<ColligationRepr> for Colligation {
    type Error = Error;

    fn try_from(r: ColligationRepr) -> Result<Self> {
        if r.d.shape() != (1, 1) {
            return Err(Error::Shape(format!("D must be 1x1, got {:?}", r.d.shape())));
        }
        Colligation::new(r.s, r.r, r.m, r.a, r.b, r.c, r.d[(0, 0)], r.mode)
    }
}

impl From<Colligation> for ColligationRepr {
    fn from(c: Colligation) -> Self {
        ColligationRepr {
            s: c.s,
            r: c.r,
            m: c.m,
            a: c.a,
            b: c.b,
            c: c.c,
            d: CMat::from_element(1, 1, c.d),
            mode: c.mode,
        }
    }
}

impl Colligation {
    /// Validates shapes `A: rm x sm`, `B: rm x 1`, `C: 1 x sm` and contractivity.
    #[allow(clippy::too_many_arguments)]
    pub fn new(s: usize, r: usize, m: usize, a: CMat, b: CMat, c: CMat, d: Complex64, mode: Mode) -> Result<Self> {
        if s == 0 || r == 0 || m == 0 {
            return Err(Error::Shape("colligation needs s, r, m >= 1".into()));
        }
        let (rm, sm) = (r * m, s * m);
        if a.shape() != (rm, sm) || b.shape() != (rm, 1) || c.shape() != (1, sm) {
            return Err(Error::Shape(format!(
                "A {:?}, B {:?}, C {:?} do not fit s={s}, r={r}, m={m}",
                a.shape(),
                b.shape(),
                c.shape()
            )));
        }
        let u = assemble(&a, &b, &c, d);
        if !linalg::is_finite(&u) {
            return Err(Error::NonFinite);
        }
        let norm = linalg::spectral_norm_unchecked(&u);
        if norm > 1.0 + CONTRACTIVE_TOL {
            return Err(Error::NotContractive { norm });
        }
        if mode == Mode::Unitary {
            if s != r {
                return Err(Error::InvalidArgument("unitary colligations need s = r".into()));
            }
            let defect = linalg::isometry_defect(&u);
            if defect > CONTRACTIVE_TOL {
                return Err(Error::NotUnitary { defect });
            }
        }
        Ok(Colligation { s, r, m, a, b, c, d, mode, norm })
    }

    /// Scalar colligation (`s = r = m = 1`) from `U = [[a, b], [c, d]]`.
    pub fn scalar(a: Complex64, b: Complex64, c: Complex64, d: Complex64, mode: Mode) -> Result<Self> {
        let m = |v| CMat::from_element(1, 1, v);
        Self::new(1, 1, 1, m(a), m(b), m(c), d, mode)
    }

    /// Random colligation, deterministic per seed. Unitary mode draws a Haar-like
    /// unitary of size `r m + 1`; contractive mode rescales a Gaussian matrix
    /// to norm [`CONTRACTIVE_NORM`].
    pub fn random(s: usize, r: usize, m: usize, seed: u64, mode: Mode) -> Result<Self> {
        Self::random_with(s, r, m, mode, &mut linalg::rng_from_seed(seed))
    }

    pub fn random_with<R: Rng + ?Sized>(s: usize, r: usize, m: usize, mode: Mode, rng: &mut R) -> Result<Self> {
        if s == 0 || r == 0 || m == 0 {
            return Err(Error::Shape("colligation needs s, r, m >= 1".into()));
        }
        let (rows, cols) = (r * m + 1, s * m + 1);
        let u = match mode {
            Mode::Unitary => {
                if s != r {
                    return Err(Error::InvalidArgument(format!("unitary colligation requested with s={s} != r={r}")));
                }
                linalg::gaussian_isometry(rows, cols, rng)
            }
            Mode::Contractive => {
                let g = linalg::gaussian_matrix(rows, cols, rng);
                let n = linalg::spectral_norm_unchecked(&g);
                g * Complex64::new(CONTRACTIVE_NORM / n, 0.0)
            }
        };
        let (rm, sm) = (r * m, s * m);
        let a = u.view((0, 0), (rm, sm)).into_owned();
        let b = u.view((0, sm), (rm, 1)).into_owned();
        let c = u.view((rm, 0), (1, sm)).into_owned();
        let d = u[(rm, sm)];
        Self::new(s, r, m, a, b, c, d, mode)
    }

    pub fn s(&self) -> usize {
        self.s
    }
    pub fn r(&self) -> usize {
        self.r
    }
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn a(&self) -> &CMat {
        &self.a
    }
    pub fn b(&self) -> &CMat {
        &self.b
    }
    pub fn c(&self) -> &CMat {
        &self.c
    }
    pub fn d(&self) -> Complex64 {
        self.d
    }
    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// `|U|`, recorded at construction.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn unitary_matrix(&self) -> CMat {
        assemble(&self.a, &self.b, &self.c, self.d)
    }

    fn check_q(&self, q: &MatrixPolyQ) -> Result<()> {
        if q.s() != self.s || q.r() != self.r {
            return Err(Error::Shape(format!(
                "colligation is for {}x{} Q, got {}x{}",
                self.s,
                self.r,
                q.s(),
                q.r()
            )));
        }
        Ok(())
    }

    /// `Q^(z)` from the block matrix `Q(z)`: shape `(s m n) x (r m n)`.
    fn lift_q(&self, qz: &CMat, n: usize) -> CMat {
        let m = self.m;
        let mut out = CMat::zeros(self.s * m * n, self.r * m * n);
        for i in 0..self.s {
            for j in 0..self.r {
                let block = qz.view((i * n, j * n), (n, n));
                for p in 0..m {
                    out.view_mut(((i * m + p) * n, (j * m + p) * n), (n, n)).copy_from(&block);
                }
            }
        }
        out
    }

    /// `X (x) I_n`.
    fn lift(x: &CMat, n: usize) -> CMat {
        x.kronecker(&CMat::identity(n, n))
    }

    /// `Q^(z) A^` and `Q^(z) B^` at level `n`.
    fn lifted(&self, q: &MatrixPolyQ, z: &MatrixTuple) -> Result<(CMat, CMat, CMat)> {
        self.check_q(q)?;
        let n = z.level();
        let qz = q.eval(z)?;
        let q_hat = self.lift_q(&qz, n);
        let t = &q_hat * Self::lift(&self.a, n);
        let qb = &q_hat * Self::lift(&self.b, n);
        Ok((qz, t, qb))
    }

    /// Closed-form transfer function value at `z in D_Q`.
    pub fn eval_closed(&self, q: &MatrixPolyQ, z: &MatrixTuple) -> Result<CMat> {
        let (qz, t, qb) = self.lifted(q, z)?;
        let qnorm = linalg::spectral_norm(&qz)?;
        if qnorm >= 1.0 {
            return Err(Error::OutsideDomain { norm: qnorm });
        }
        let n = z.level();
        let dim = t.nrows();
        let resolvent = CMat::identity(dim, dim) - t;
        let lu = LU::new(resolvent);
        let diag = lu.u().diagonal();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for v in diag.iter() {
            lo = lo.min(v.norm());
            hi = hi.max(v.norm());
        }
        let rcond = if hi == 0.0 { 0.0 } else { lo / hi };
        if rcond < RCOND_MIN {
            return Err(Error::Singular { rcond });
        }
        let x = lu.solve(&qb).ok_or(Error::Singular { rcond: 0.0 })?;
        let f = CMat::identity(n, n) * self.d + Self::lift(&self.c, n) * x;
        let fnorm = linalg::spectral_norm(&f)?;
        if fnorm > 1.0 + SCHUR_TOL {
            return Err(Error::SchurBound { norm: fnorm });
        }
        Ok(f)
    }

    /// Scaled Neumann partial sum
    /// `f_{N,r}(z) = D I + sum_{k=0}^{N} C^ (r Q^ A^)^k (r Q^) B^`;
    /// with `r = 1` this is the plain partial sum `p_N(z)`.
    pub fn eval_neumann(&self, q: &MatrixPolyQ, z: &MatrixTuple, terms: usize, r: f64) -> Result<CMat> {
        check_scale(r, true)?;
        let (_, t, qb) = self.lifted(q, z)?;
        let n = z.level();
        let rc = Complex64::new(r, 0.0);
        let t = t * rc;
        let c_hat = Self::lift(&self.c, n);
        let mut v = qb * rc;
        let mut acc = CMat::identity(n, n) * self.d + &c_hat * &v;
        for _ in 0..terms {
            v = &t * v;
            acc += &c_hat * &v;
        }
        Ok(acc)
    }

    /// All partial sums `f_{0,r}(z), ..., f_{terms,r}(z)` from one pass of the
    /// recursion behind [`Colligation::eval_neumann`].
    pub fn neumann_sequence(&self, q: &MatrixPolyQ, z: &MatrixTuple, terms: usize, r: f64) -> Result<Vec<CMat>> {
        check_scale(r, true)?;
        let (_, t, qb) = self.lifted(q, z)?;
        let n = z.level();
        let rc = Complex64::new(r, 0.0);
        let t = t * rc;
        let c_hat = Self::lift(&self.c, n);
        let mut v = qb * rc;
        let mut acc = CMat::identity(n, n) * self.d + &c_hat * &v;
        let mut out = Vec::with_capacity(terms + 1);
        out.push(acc.clone());
        for _ in 0..terms {
            v = &t * v;
            acc += &c_hat * &v;
            out.push(acc.clone());
        }
        Ok(out)
    }

    /// `rho = |Q^(z) A^|`, the contraction ratio of the Neumann series at `z`.
    pub fn series_ratio(&self, q: &MatrixPolyQ, z: &MatrixTuple) -> Result<f64> {
        let (_, t, _) = self.lifted(q, z)?;
        linalg::spectral_norm(&t)
    }

    /// Pointwise bound on `|p_N(z) - f(z)|`:
    /// `|C| |B| rho^{N+1} |Q(z)| / (1 - rho)` with `rho = |Q^(z) A^|`.
    pub fn neumann_tail_bound(&self, q: &MatrixPolyQ, z: &MatrixTuple, terms: usize) -> Result<f64> {
        let (qz, t, _) = self.lifted(q, z)?;
        let rho = linalg::spectral_norm(&t)?;
        if rho >= 1.0 {
            return Ok(f64::INFINITY);
        }
        let qn = linalg::spectral_norm(&qz)?;
        Ok(self.c.norm() * self.b.norm() * rho.powi(terms as i32 + 1) * qn / (1.0 - rho))
    }

    /// The free polynomial `f_{N,r}` obtained by running the Neumann sum over
    /// the polynomial ring: `D + sum_{k=0}^{N} C (Q~ A)^k Q~ B` with
    /// `Q~[(i,p),(j,q)] = delta_pq r q_ij`.
    pub fn synthesize(&self, q: &MatrixPolyQ, terms: usize, r: f64, caps: Caps) -> Result<FreePolynomial> {
        check_scale(r, true)?;
        self.check_q(q)?;
        let d = q.d();
        let degree = (terms + 1) * q.degree();
        if degree > caps.max_degree {
            return Err(Error::DegreeCap { degree, cap: caps.max_degree });
        }
        let words = count_words_up_to(d, degree);
        if words > caps.max_words as u128 {
            return Err(Error::WordCap { count: words, cap: caps.max_words });
        }

        let m = self.m;
        let rc = Complex64::new(r, 0.0);
        let scaled: Vec<FreePolynomial> = (0..self.s * self.r)
            .map(|k| q.entry(k / self.r, k % self.r).scale(rc))
            .collect();
        // v = Q~ B as a vector indexed by (i, p) in [s] x [m].
        let mut v: Vec<FreePolynomial> = Vec::with_capacity(self.s * m);
        for i in 0..self.s {
            for p in 0..m {
                let mut acc = FreePolynomial::zero(d);
                for j in 0..self.r {
                    let coeff = self.b[(j * m + p, 0)];
                    if coeff.norm() > 0.0 {
                        acc = acc.add(&scaled[i * self.r + j].scale(coeff))?;
                    }
                }
                v.push(acc);
            }
        }
        let mut out = FreePolynomial::constant(d, self.d);
        out = out.add(&self.contract_c(&v, d)?)?;
        for _ in 0..terms {
            // w = A v, indexed by (j, q) in [r] x [m]
            let mut w: Vec<FreePolynomial> = Vec::with_capacity(self.r * m);
            for row in 0..self.r * m {
                let mut acc = FreePolynomial::zero(d);
                for (col, vp) in v.iter().enumerate() {
                    let coeff = self.a[(row, col)];
                    if coeff.norm() > 0.0 && !vp.is_zero() {
                        acc = acc.add(&vp.scale(coeff))?;
                    }
                }
                w.push(acc);
            }
            // v = Q~ w
            let mut next = Vec::with_capacity(self.s * m);
            for i in 0..self.s {
                for p in 0..m {
                    let mut acc = FreePolynomial::zero(d);
                    for j in 0..self.r {
                        let qij = &scaled[i * self.r + j];
                        let wj = &w[j * m + p];
                        if !qij.is_zero() && !wj.is_zero() {
                            acc = acc.add(&qij.mul(wj)?)?;
                        }
                    }
                    next.push(acc);
                }
            }
            v = next;
            out = out.add(&self.contract_c(&v, d)?)?;
        }
        Ok(out)
    }

    fn contract_c(&self, v: &[FreePolynomial], d: usize) -> Result<FreePolynomial> {
        let mut acc = FreePolynomial::zero(d);
        for (k, vk) in v.iter().enumerate() {
            let coeff = self.c[(0, k)];
            if coeff.norm() > 0.0 && !vk.is_zero() {
                acc = acc.add(&vk.scale(coeff))?;
            }
        }
        Ok(acc)
    }

    /// Uniform bound `T(N, r) = |C| |B| r^{N+2} / (1 - r)` on
    /// `sup_{D_Q} |f_{N,r} - f_r|`, valid because `|Q(z)| < 1` and `|A| <= 1`.
    pub fn certified_tail_bound(&self, r: f64, terms: usize) -> Result<f64> {
        check_scale(r, false)?;
        let cb = self.c.norm() * self.b.norm();
        if cb == 0.0 {
            return Ok(0.0);
        }
        Ok(cb * r.powf(terms as f64 + 2.0) / (1.0 - r))
    }

    /// Smallest `N` with `r (1 + T(N, r)) <= 1`, which forces
    /// `sup_{D_Q} |r f_{N,r}| <= 1`.
    pub fn find_n0(&self, r: f64) -> Result<usize> {
        check_scale(r, false)?;
        let mut n = 0;
        loop {
            if r * (1.0 + self.certified_tail_bound(r, n)?) <= 1.0 {
                return Ok(n);
            }
            n += 1;
        }
    }
}

fn assemble(a: &CMat, b: &CMat, c: &CMat, d: Complex64) -> CMat {
    let (rm, sm) = a.shape();
    let mut u = CMat::zeros(rm + 1, sm + 1);
    u.view_mut((0, 0), (rm, sm)).copy_from(a);
    u.view_mut((0, sm), (rm, 1)).copy_from(b);
    u.view_mut((rm, 0), (1, sm)).copy_from(c);
    u[(rm, sm)] = d;
    u
}

fn check_scale(r: f64, allow_one: bool) -> Result<()> {
    let ok = r > 0.0 && if allow_one { r <= 1.0 } else { r < 1.0 };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "scaling r must lie in (0, {}), got {r}",
            if allow_one { "1]" } else { "1" }
        )))
    }
}
