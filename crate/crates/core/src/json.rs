//! Shared JSON encoding for complex matrices: row-major nested arrays with
//! each entry written as a `[re, im]` pair.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::CMat;

pub type MatrixRepr = Vec<Vec<[f64; 2]>>;

pub fn to_repr(m: &CMat) -> MatrixRepr {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn from_repr(rows: &MatrixRepr) -> Result<CMat> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Shape("ragged matrix rows".into()));
    }
    let mut m = CMat::zeros(nrows, ncols);
    for (i, row) in rows.iter().enumerate() {
        for (j, [re, im]) in row.iter().enumerate() {
            m[(i, j)] = Complex64::new(*re, *im);
        }
    }
    Ok(m)
}

/// `#[serde(with = "crate::json::matrix")]` adapter.
pub mod matrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &CMat, s: S) -> std::result::Result<S::Ok, S::Error> {
        to_repr(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMat, D::Error> {
        let repr = MatrixRepr::deserialize(d)?;
        from_repr(&repr).map_err(serde::de::Error::custom)
    }
}

/// `#[serde(with = "crate::json::matrices")]` adapter for a list of matrices.
pub mod matrices {
    use super::*;

    pub fn serialize<S: Serializer>(ms: &[CMat], s: S) -> std::result::Result<S::Ok, S::Error> {
        ms.iter().map(to_repr).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<CMat>, D::Error> {
        let reprs = Vec::<MatrixRepr>::deserialize(d)?;
        reprs
            .iter()
            .map(|r| from_repr(r).map_err(serde::de::Error::custom))
            .collect()
    }
}
