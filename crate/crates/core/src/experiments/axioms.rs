//! Randomized checks that evaluation maps are nc functions: graded, and
//! respecting direct sums, similarities and intertwinings.

use num_complex::Complex64;
use rand::Rng;
use serde_json::json;

use super::{random_configuration, sub_seed, Configuration, ExperimentReport, ReportBuilder, DEFAULT_MARGIN};
use crate::error::Result;
use crate::linalg::{self, CMat};
use crate::mattuple::{random_tuple_with, MatrixTuple};
use crate::ncalg::{FreePolynomial, Word};

pub const POLY_TOL: f64 = 1e-11;
pub const REALIZATION_TOL: f64 = 1e-9;
/// Largest condition number of random similarities.
pub const MAX_COND: f64 = 100.0;

const AXIOMS: [&str; 4] = ["graded", "direct_sum", "similarity", "intertwining"];

/// The function under test, evaluated at a point.
enum Subject {
    Poly(FreePolynomial),
    Realization(Box<Configuration>),
    Conjugate,
}

impl Subject {
    fn eval(&self, z: &MatrixTuple) -> Result<CMat> {
        match self {
            Subject::Poly(p) => p.eval(z),
            Subject::Realization(c) => c.col.eval_closed(&c.q, z),
            Subject::Conjugate => Ok(z.coord(0).map(|v| v.conj())),
        }
    }

    fn d(&self) -> usize {
        match self {
            Subject::Poly(p) => p.d(),
            Subject::Realization(c) => c.q.d(),
            Subject::Conjugate => 1,
        }
    }

    /// A point of the domain at `level`.
    fn point<R: Rng + ?Sized>(&self, level: usize, rng: &mut R) -> Result<MatrixTuple> {
        match self {
            Subject::Realization(c) => c.q.sample_point(level, DEFAULT_MARGIN, rng),
            _ => random_tuple_with(level, self.d(), 1.0, rng),
        }
    }

    /// Shrinks `z` until both `z` and `s z s^-1` lie in the domain with margin.
    fn similar_pair(&self, mut z: MatrixTuple, s: &CMat) -> Result<(MatrixTuple, MatrixTuple)> {
        let shrink = Complex64::new(0.8, 0.0);
        loop {
            let w = z.conjugate(s)?;
            let ok = match self {
                Subject::Realization(c) => c.q.contains(&w, DEFAULT_MARGIN)?.member,
                _ => true,
            };
            if ok {
                return Ok((z, w));
            }
            z = z.scale(shrink);
        }
    }
}

/// Random polynomial over `d` letters with up to 8 terms of degree `<= 3`.
fn random_poly<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<FreePolynomial> {
    let terms = rng.random_range(1..=8);
    let mut out = Vec::with_capacity(terms);
    for _ in 0..terms {
        let len = rng.random_range(0..=3);
        let letters = (0..len).map(|_| rng.random_range(1..=d as u32)).collect();
        out.push((Word::new(letters, d)?, linalg::complex_gaussian(rng)));
    }
    FreePolynomial::from_terms(d, out)
}

/// `|a - b| / (1 + scale)`.
fn rel(a: &CMat, b: &CMat, scale: f64) -> f64 {
    linalg::spectral_norm_unchecked(&(a - b)) / (1.0 + scale)
}

fn norm(m: &CMat) -> f64 {
    linalg::spectral_norm_unchecked(m)
}

/// Defect of one axiom for one random draw.
fn axiom_defect<R: Rng + ?Sized>(subject: &Subject, axiom: &str, rng: &mut R) -> Result<(usize, f64)> {
    let n = rng.random_range(1..=4);
    match axiom {
        "graded" => {
            let z = subject.point(n, rng)?;
            let f = subject.eval(&z)?;
            Ok((n, if f.shape() == (n, n) { 0.0 } else { 1.0 }))
        }
        "direct_sum" => {
            let a = subject.point(n, rng)?;
            let b = subject.point(rng.random_range(1..=4), rng)?;
            let (fa, fb) = (subject.eval(&a)?, subject.eval(&b)?);
            let sum = linalg::block_diag(&[&fa, &fb]);
            let fs = subject.eval(&a.direct_sum(&b)?)?;
            Ok((a.level() + b.level(), rel(&fs, &sum, norm(&sum))))
        }
        "similarity" => {
            let cond = rng.random_range(1.0..=MAX_COND);
            let s = linalg::random_invertible(n, cond, rng);
            let inv = s.clone().try_inverse().expect("well conditioned");
            let (z, w) = subject.similar_pair(subject.point(n, rng)?, &s)?;
            let fz = subject.eval(&z)?;
            let expect = &s * &fz * &inv;
            Ok((n, rel(&subject.eval(&w)?, &expect, norm(&s) * norm(&inv) * norm(&fz))))
        }
        _ => intertwining_defect(subject, n, rng),
    }
}

/// `alpha x = y alpha` with `y = (S x S^-1) (+) b` and `alpha = [S; 0]`;
/// the defect is `|alpha f(x) - f(y) alpha| / (1 + |alpha| |f(x)|)`.
fn intertwining_defect<R: Rng + ?Sized>(subject: &Subject, n: usize, rng: &mut R) -> Result<(usize, f64)> {
    let cond = rng.random_range(1.0..=MAX_COND);
    let s = linalg::random_invertible(n, cond, rng);
    let (x, sx) = subject.similar_pair(subject.point(n, rng)?, &s)?;
    let b = subject.point(rng.random_range(1..=4), rng)?;
    let y = sx.direct_sum(&b)?;
    let mut alpha = CMat::zeros(y.level(), n);
    alpha.view_mut((0, 0), (n, n)).copy_from(&s);
    debug_assert!(x.check_intertwine(&y, &alpha, 1e-8)?.holds);
    let fx = subject.eval(&x)?;
    let fy = subject.eval(&y)?;
    Ok((y.level(), rel(&(&alpha * &fx), &(fy * &alpha), norm(&alpha) * norm(&fx))))
}

/// `trials` random checks per axiom for polynomial and realization
/// functions at levels 1 to 4, plus entrywise conjugation as a graded
/// function that must fail the intertwining check.
pub fn nc_axiom_suite(seed: u64, trials: usize) -> Result<ExperimentReport> {
    let inputs = json!({
        "seed": seed, "trials": trials, "poly_tol": POLY_TOL,
        "realization_tol": REALIZATION_TOL, "max_cond": MAX_COND,
    });
    let mut b = ReportBuilder::new("nc_axioms", inputs);
    let mut rng = linalg::rng_from_seed(seed);
    let mut worst = [[0.0f64; 4]; 2];
    for t in 0..trials {
        for (ai, axiom) in AXIOMS.iter().enumerate() {
            let d = rng.random_range(1..=2);
            let poly = Subject::Poly(random_poly(d, &mut rng)?);
            let (level, defect) = axiom_defect(&poly, axiom, &mut rng)?;
            worst[0][ai] = worst[0][ai].max(defect);
            b.record(format!("poly/{axiom}/{t}"), level, defect, 0.0, defect <= POLY_TOL);

            let cfg = random_configuration(1, DEFAULT_MARGIN, &mut rng)?;
            let real = Subject::Realization(Box::new(cfg));
            let (level, defect) = axiom_defect(&real, axiom, &mut rng)?;
            worst[1][ai] = worst[1][ai].max(defect);
            b.record(format!("realization/{axiom}/{t}"), level, defect, 0.0, defect <= REALIZATION_TOL);
        }
    }
    for (ai, axiom) in AXIOMS.iter().enumerate() {
        b.check_le(&format!("poly_{axiom}"), worst[0][ai], POLY_TOL);
        b.check_le(&format!("realization_{axiom}"), worst[1][ai], REALIZATION_TOL);
    }

    // Entrywise conjugation is graded and respects direct sums, but not
    // complex similarities; every draw must fail.
    let mut crng = linalg::rng_from_seed(sub_seed(seed, 3));
    let mut weakest = f64::INFINITY;
    for _ in 0..trials.max(1) {
        let n = crng.random_range(2..=4);
        let (_, defect) = intertwining_defect(&Subject::Conjugate, n, &mut crng)?;
        weakest = weakest.min(defect);
    }
    b.control("conjugation_intertwining", weakest, 1e-6, true);
    Ok(b.finish())
}
