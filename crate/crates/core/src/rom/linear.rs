use crate::error::{Error, Result};
use crate::la::{apply_kron_transpose, unvec, ColumnVector, DenseMatrix};

/// Default cap on a single `n²`-sized intermediate, in bytes.
pub const DEFAULT_MEMORY_BUDGET: usize = 256 << 20;

/// Skewness tolerance for `D` and `D_c`, relative to `max(1, max|D|)`.
const SKEW_TOL: f64 = 1e-12;

/// The `n² x n` matrix with `vec(YD + DY) = D̃ y` for `Y = diag(y)`.
///
/// Column `k` has at most `2n` nonzeros: `d_ik` at row `i + k n` (from
/// `DY`) and `d_kj` at row `k + j n` (from `YD`). Only `D` is stored.
#[derive(Clone, Debug)]
pub struct DtildeMatrix {
    d: DenseMatrix,
}

pub fn build_dtilde(d: &DenseMatrix) -> Result<DtildeMatrix> {
    check_skew("D", d)?;
    Ok(DtildeMatrix { d: d.clone() })
}

fn check_skew(what: &str, d: &DenseMatrix) -> Result<()> {
    if d.rows() != d.cols() {
        return Err(Error::shape(format!("{what} is {}x{}, expected square", d.rows(), d.cols())));
    }
    let asym = d.max_asymmetry();
    if asym > SKEW_TOL * d.max_abs().max(1.0) {
        return Err(Error::NotSkew {
            what: what.into(),
            asymmetry: asym,
        });
    }
    Ok(())
}

impl DtildeMatrix {
    pub fn n(&self) -> usize {
        self.d.rows()
    }

    /// Nonzeros of column `k` as `(row, value)`, sorted by row.
    pub fn column_entries(&self, k: usize) -> Vec<(usize, f64)> {
        let n = self.n();
        let mut out = Vec::with_capacity(2 * n);
        for j in 0..n {
            if j == k {
                // block k holds column k of D; (k, k) gets both terms
                for i in 0..n {
                    let mut v = self.d[(i, k)];
                    if i == k {
                        v += self.d[(k, k)];
                    }
                    if v != 0.0 {
                        out.push((i + k * n, v));
                    }
                }
            } else if self.d[(k, j)] != 0.0 {
                out.push((k + j * n, self.d[(k, j)]));
            }
        }
        out
    }

    /// `D̃ y`, i.e. `vec(YD + DY)`; entry `(i, j)` is `d_ij (y_i + y_j)`.
    pub fn apply(&self, y: &[f64]) -> Result<ColumnVector> {
        let n = self.n();
        if y.len() != n {
            return Err(Error::shape(format!("D̃ applied to length {}, expected {n}", y.len())));
        }
        let mut out = ColumnVector::zeros(n * n);
        for j in 0..n {
            for i in 0..n {
                let d = self.d[(i, j)];
                if d != 0.0 {
                    out[i + j * n] = d * (y[i] + y[j]);
                }
            }
        }
        Ok(out)
    }

    /// Dense `n² x n` form, for small-`n` checks.
    pub fn to_dense(&self) -> DenseMatrix {
        let n = self.n();
        let mut out = DenseMatrix::zeros(n * n, n);
        for k in 0..n {
            for (row, v) in self.column_entries(k) {
                out[(row, k)] = v;
            }
        }
        out
    }
}

/// Offline tensors of the fast path: `m_lin = (V⊗V)ᵀ D̃ V` (`r² x r`) and
/// `s_const_r = Vᵀ D_c V` (zero when `D_c` is absent). Each column of
/// `m_lin` and `s_const_r` itself is stored as its exactly skew part.
pub fn linear_s_offline(
    v: &DenseMatrix,
    d: &DenseMatrix,
    d_const: Option<&DenseMatrix>,
    memory_budget: usize,
) -> Result<(DenseMatrix, DenseMatrix)> {
    let (n, r) = v.shape();
    if d.rows() != n {
        return Err(Error::shape(format!("D is {}x{}, basis has {n} rows", d.rows(), d.cols())));
    }
    let needed = n * n * std::mem::size_of::<f64>();
    if needed > memory_budget {
        return Err(Error::MemoryBudget {
            needed,
            budget: memory_budget,
        });
    }
    let dt = build_dtilde(d)?;
    let mut m_lin = DenseMatrix::zeros(r * r, r);
    for k in 0..r {
        let x = dt.apply(v.column(k))?;
        let col = apply_kron_transpose(v, v, &x)?;
        let skew = unvec(&col, r, r)?.skew_part();
        m_lin.column_mut(k).copy_from_slice(skew.as_slice());
    }
    let s_const_r = match d_const {
        Some(dc) => {
            if dc.shape() != (n, n) {
                return Err(Error::shape(format!("D_c is {:?}, expected {n}x{n}", dc.shape())));
            }
            check_skew("D_c", dc)?;
            v.tr_matmul(&dc.matmul(v)).skew_part()
        }
        None => DenseMatrix::zeros(r, r),
    };
    Ok((m_lin, s_const_r))
}

/// `S_r(z) = unvec(m_lin z, r, r) + s_const_r`.
pub fn linear_s_eval(m_lin: &DenseMatrix, s_const_r: &DenseMatrix, z: &[f64]) -> Result<DenseMatrix> {
    let r = s_const_r.rows();
    if z.len() != r || m_lin.shape() != (r * r, r) {
        return Err(Error::shape(format!(
            "fast-path operator {:?} with constant part {r}x{r} and state of length {}",
            m_lin.shape(),
            z.len()
        )));
    }
    let mut s = unvec(&m_lin.matvec(z), r, r)?;
    s.add_scaled(1.0, s_const_r);
    Ok(s)
}
