use super::{ColumnVector, DenseMatrix};
use crate::error::{Error, Result};

/// Dense LU factorization with partial pivoting, `P A = L U`.
///
/// Elimination skips exact-zero multipliers and pivot-row entries, so
/// banded matrices with periodic corners (the Newton matrices of the
/// difference schemes) factor in roughly `O(n²)` instead of `O(n³)`.
/// The arithmetic is otherwise identical to the textbook algorithm.
#[derive(Clone, Debug)]
pub struct LuFactorization {
    n: usize,
    lu: DenseMatrix,
    perm: Vec<usize>,
}

impl LuFactorization {
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::shape(format!("LU of a non-square {}x{} matrix", n, a.cols())));
        }
        if !a.is_finite() {
            return Err(Error::NonFinite("LU input".into()));
        }
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut rows_below = Vec::with_capacity(n);

        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax == 0.0 {
                return Err(Error::Singular(k));
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let data = lu.as_mut_slice();
                    data.swap(k + j * n, p + j * n);
                }
            }
            let pivot = lu[(k, k)];
            rows_below.clear();
            for i in k + 1..n {
                let l = lu[(i, k)];
                if l != 0.0 {
                    let l = l / pivot;
                    lu[(i, k)] = l;
                    rows_below.push(i);
                }
            }
            if rows_below.is_empty() {
                continue;
            }
            for j in k + 1..n {
                let ukj = lu[(k, j)];
                if ukj == 0.0 {
                    continue;
                }
                for &i in &rows_below {
                    let l = lu[(i, k)];
                    lu[(i, j)] -= l * ukj;
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Result<ColumnVector> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::shape(format!("rhs of length {} for a {n}x{n} system", b.len())));
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        // forward substitution, column oriented
        for k in 0..n {
            let xk = x[k];
            if xk == 0.0 {
                continue;
            }
            let col = self.lu.column(k);
            for i in k + 1..n {
                x[i] -= col[i] * xk;
            }
        }
        for k in (0..n).rev() {
            let col = self.lu.column(k);
            x[k] /= col[k];
            let xk = x[k];
            if xk == 0.0 {
                continue;
            }
            for i in 0..k {
                x[i] -= col[i] * xk;
            }
        }
        let x = ColumnVector::from(x);
        if !x.is_finite() {
            return Err(Error::NonFinite("LU solution".into()));
        }
        Ok(x)
    }

    /// `A⁻¹`, column by column.
    pub fn inverse(&self) -> Result<DenseMatrix> {
        let mut cols = Vec::with_capacity(self.n);
        let mut e = vec![0.0; self.n];
        for j in 0..self.n {
            e[j] = 1.0;
            cols.push(self.solve(&e)?);
            e[j] = 0.0;
        }
        Ok(DenseMatrix::from_columns(&cols))
    }
}
