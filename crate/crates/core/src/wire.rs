//! JSON wire shapes for matrices and vectors.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};

/// `{ "dim": n, "re": [[...]], "im": [[...]] }`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl From<&CMatrix> for MatrixJson {
    fn from(m: &CMatrix) -> Self {
        let rows = |f: fn(&Complex64) -> f64| {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect())
                .collect()
        };
        MatrixJson {
            dim: m.nrows(),
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }
}

impl TryFrom<&MatrixJson> for CMatrix {
    type Error = Error;

    fn try_from(j: &MatrixJson) -> Result<Self> {
        let n = j.dim;
        let shape_ok = |rows: &Vec<Vec<f64>>| rows.len() == n && rows.iter().all(|r| r.len() == n);
        if n == 0 || !shape_ok(&j.re) || !shape_ok(&j.im) {
            return Err(Error::InvalidArgument(format!(
                "matrix JSON does not describe a {n}x{n} matrix"
            )));
        }
        Ok(CMatrix::from_fn(n, n, |r, c| Complex64::new(j.re[r][c], j.im[r][c])))
    }
}

/// `{ "re": [...], "im": [...] }`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorJson {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl From<&CVector> for VectorJson {
    fn from(v: &CVector) -> Self {
        VectorJson {
            re: v.iter().map(|z| z.re).collect(),
            im: v.iter().map(|z| z.im).collect(),
        }
    }
}

impl TryFrom<&VectorJson> for CVector {
    type Error = Error;

    fn try_from(j: &VectorJson) -> Result<Self> {
        if j.re.len() != j.im.len() || j.re.is_empty() {
            return Err(Error::InvalidArgument(
                "vector JSON needs matching non-empty re/im arrays".into(),
            ));
        }
        Ok(CVector::from_iterator(
            j.re.len(),
            j.re.iter().zip(&j.im).map(|(&re, &im)| Complex64::new(re, im)),
        ))
    }
}

/// `serialize_with` adapter for bare matrices.
pub fn serialize_matrix<S: serde::Serializer>(
    m: &CMatrix,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    MatrixJson::from(m).serialize(s)
}
