//! Computational free function theory at desk scale.
//!
//! The crate works with free polynomials in `d` noncommuting letters, their
//! evaluation on tuples of complex matrices, basic free open sets
//! `D_Q = { z : |Q(z)| < 1 }`, transfer-function realizations of Schur-Agler
//! functions on them, truncated ideals of matrix points and dilation hulls.
//! The [`experiments`] module chains these into reproducible reports which
//! check that a realized function coincides with one polynomial on a whole
//! dilation hull.

pub mod dilation;
pub mod domain;
pub mod error;
pub mod experiments;
pub mod json;
pub mod linalg;
pub mod mattuple;
pub mod ncalg;
pub mod realization;
pub mod zariski;

pub use error::{Error, Result};
pub use linalg::{c64, CMat};
pub use mattuple::MatrixTuple;
pub use ncalg::{parse_poly, FreePolynomial, Word};
pub use num_complex::Complex64;
