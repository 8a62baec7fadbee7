//! Dense linear algebra: containers, the vec isomorphism, Kronecker-transpose
//! application, thin SVD, LU and the SKM1 matrix file format.

mod io;
mod lu;
mod matrix;
mod svd;

pub use io::{read_matrix, write_matrix, MAGIC};
pub use lu::LuFactorization;
pub use matrix::{ColumnVector, DenseMatrix};
pub use svd::{svd_thin, SvdResult};

use crate::error::{Error, Result};

/// Stacks the columns of `a` into one vector.
pub fn vec(a: &DenseMatrix) -> ColumnVector {
    ColumnVector::from(a.as_slice().to_vec())
}

/// Inverse of [`vec`]: reshapes `v` column-major into `rows x cols`.
pub fn unvec(v: &[f64], rows: usize, cols: usize) -> Result<DenseMatrix> {
    DenseMatrix::from_col_major(rows, cols, v.to_vec())
        .map_err(|_| Error::shape(format!("vector of length {} is not {rows}x{cols}", v.len())))
}

/// Computes `(V ⊗ W)ᵀ x` as `vec(Wᵀ · unvec(x) · V)` without forming the
/// Kronecker product. `V` and `W` are `n x r` and `x` has length `n²`;
/// the result has length `r_v · r_w`.
pub fn apply_kron_transpose(v: &DenseMatrix, w: &DenseMatrix, x: &[f64]) -> Result<ColumnVector> {
    let n = v.rows();
    if w.rows() != n {
        return Err(Error::shape(format!(
            "kron factors have {} and {} rows",
            v.rows(),
            w.rows()
        )));
    }
    if x.len() != n * n {
        return Err(Error::shape(format!(
            "kron operand has length {}, expected {}",
            x.len(),
            n * n
        )));
    }
    let xm = nalgebra::DMatrixView::from_slice(x, n, n);
    let xv = xm * v.view();
    let out = w.view().tr_mul(&xv);
    Ok(ColumnVector::from(out.as_slice().to_vec()))
}
