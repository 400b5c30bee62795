//! Small dense linear-algebra helpers shared by the objective, controller and
//! simulation layers.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Condition number above which a matrix is treated as singular.
pub const SINGULAR_COND: f64 = 1e12;

/// 2-norm condition number from the singular values.
pub fn condition_number(m: &Matrix) -> f64 {
    let sv = m.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Inverse with a hard condition-number gate; `what` and `t` end up in the error.
pub fn checked_inverse(m: &Matrix, what: &str, t: f64, state: &[f64]) -> Result<Matrix> {
    let cond = condition_number(m);
    if !(cond < SINGULAR_COND) {
        return Err(Error::Singular {
            what: what.to_string(),
            t,
            cond,
            state: state.to_vec(),
        });
    }
    m.clone().try_inverse().ok_or_else(|| Error::Singular {
        what: what.to_string(),
        t,
        cond,
        state: state.to_vec(),
    })
}

pub fn is_symmetric(m: &Matrix, tol: f64) -> bool {
    m.is_square() && (m - m.transpose()).abs().max() <= tol * (1.0 + m.abs().max())
}

/// Symmetric and Cholesky-factorizable.
pub fn is_spd(m: &Matrix) -> bool {
    is_symmetric(m, 1e-12) && m.clone().cholesky().is_some()
}

pub fn require_spd(m: &Matrix, name: &str) -> Result<()> {
    if is_spd(m) {
        Ok(())
    } else {
        Err(Error::NotPositiveDefinite {
            name: name.to_string(),
        })
    }
}

pub fn from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Dimension("ragged matrix rows".into()));
    }
    Ok(Matrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// A square matrix written either as a scalar multiple of the identity or in full.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Scalar(f64),
    Full(Vec<Vec<f64>>),
}

impl MatrixSpec {
    pub fn to_matrix(&self, dim: usize) -> Result<Matrix> {
        match self {
            MatrixSpec::Scalar(s) => Ok(*s * Matrix::identity(dim, dim)),
            MatrixSpec::Full(rows) => {
                let m = from_rows(rows)?;
                if m.nrows() != dim || m.ncols() != dim {
                    return Err(Error::Dimension(format!(
                        "expected a {dim}x{dim} matrix, got {}x{}",
                        m.nrows(),
                        m.ncols()
                    )));
                }
                Ok(m)
            }
        }
    }
}

/// `tr(Xᵀ G⁻¹ X)` for a positive-definite gain `G`.
pub fn weighted_trace(x: &Matrix, gain_inv: &Matrix) -> f64 {
    (x.transpose() * gain_inv * x).trace()
}

/// Componentwise sign with `sgn(0) = 0`.
pub fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}
