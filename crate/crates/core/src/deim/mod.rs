//! Discrete empirical interpolation: greedy index selection, the oblique
//! projector for vector-valued nonlinearities, and the matrix-valued
//! variant that keeps reduced operators skew-symmetric.

mod skew;

pub use skew::{gather_entries, skew_deim_eval, CompressedSnapshots, SkewDeimOperator};

use crate::error::{Error, Result};
use crate::la::{ColumnVector, DenseMatrix, LuFactorization};

/// Position of the largest `|x_i|`, first one on ties.
pub fn argmax_abs(x: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in x.iter().enumerate() {
        if v.abs() > x[best].abs() {
            best = i;
        }
    }
    best
}

/// Output of the greedy selection. Indices are 0-based rows of the basis.
#[derive(Clone, Debug)]
pub struct DeimSelection {
    pub indices: Vec<usize>,
    /// `PᵀU`, the basis rows at `indices`.
    pub pu: DenseMatrix,
    pub lu: LuFactorization,
}

/// Greedy DEIM index selection over the columns of `u`.
pub fn deim_select(u: &DenseMatrix) -> Result<DeimSelection> {
    let (n, m) = u.shape();
    if m == 0 || m > n {
        return Err(Error::shape(format!("DEIM basis of shape {n}x{m}")));
    }
    let mut indices = Vec::with_capacity(m);
    for l in 0..m {
        let ul = u.column_vector(l);
        let scale = ul.norm_inf();
        let residual = if l == 0 {
            ul.clone()
        } else {
            let head = u.leading_columns(l);
            let lu = LuFactorization::new(&head.select_rows(&indices)).map_err(|_| Error::DeimSelection(l))?;
            let rhs: Vec<f64> = indices.iter().map(|&i| ul[i]).collect();
            let c = lu.solve(&rhs)?;
            ul.sub(&head.matvec(&c))
        };
        let k = argmax_abs(&residual);
        let rho = residual[k].abs();
        if !(rho > f64::EPSILON * scale) || indices.contains(&k) {
            return Err(Error::DeimSelection(l));
        }
        indices.push(k);
    }
    let pu = u.select_rows(&indices);
    let lu = LuFactorization::new(&pu).map_err(|_| Error::DeimSelection(m - 1))?;
    Ok(DeimSelection { indices, pu, lu })
}

/// DEIM approximation of a vector-valued nonlinearity projected onto a
/// POD basis.
#[derive(Clone, Debug)]
pub struct DeimOperator {
    pub basis_u: DenseMatrix,
    pub indices: Vec<usize>,
    /// `VᵀU (PᵀU)⁻¹`.
    pub projector: DenseMatrix,
    lu: LuFactorization,
}

impl DeimOperator {
    pub fn new(basis_u: DenseMatrix, v: &DenseMatrix) -> Result<Self> {
        if v.rows() != basis_u.rows() {
            return Err(Error::shape(format!(
                "POD basis has {} rows, DEIM basis has {}",
                v.rows(),
                basis_u.rows()
            )));
        }
        let sel = deim_select(&basis_u)?;
        let projector = v.tr_matmul(&basis_u).matmul(&sel.lu.inverse()?);
        Ok(Self {
            basis_u,
            indices: sel.indices,
            projector,
            lu: sel.lu,
        })
    }

    pub fn m(&self) -> usize {
        self.indices.len()
    }

    /// `c = (PᵀU)⁻¹ Pᵀg`.
    pub fn coefficients(&self, g_at_indices: &[f64]) -> Result<ColumnVector> {
        self.lu.solve(g_at_indices)
    }

    /// `U c`, the full-length interpolant.
    pub fn interpolate(&self, g_at_indices: &[f64]) -> Result<ColumnVector> {
        Ok(self.basis_u.matvec(&self.coefficients(g_at_indices)?))
    }

    pub fn sample(&self, g: &[f64]) -> ColumnVector {
        self.indices.iter().map(|&i| g[i]).collect()
    }
}

/// Approximates `Vᵀg` from the `m` sampled entries `Pᵀg`.
pub fn deim_project(op: &DeimOperator, g_at_indices: &[f64]) -> Result<ColumnVector> {
    if g_at_indices.len() != op.m() {
        return Err(Error::shape(format!(
            "{} samples for {} DEIM indices",
            g_at_indices.len(),
            op.m()
        )));
    }
    Ok(op.projector.matvec(g_at_indices))
}

type NonlinearFn = Box<dyn Fn(&ColumnVector) -> ColumnVector + Send + Sync>;

/// `f(y) = A y + g(y)`.
pub struct AffineDecomposition {
    pub linear: DenseMatrix,
    pub nonlinear: NonlinearFn,
}

impl AffineDecomposition {
    pub fn new(
        linear: DenseMatrix,
        nonlinear: impl Fn(&ColumnVector) -> ColumnVector + Send + Sync + 'static,
    ) -> Self {
        Self {
            linear,
            nonlinear: Box::new(nonlinear),
        }
    }

    pub fn eval(&self, y: &ColumnVector) -> ColumnVector {
        self.linear.matvec(y).add(&(self.nonlinear)(y))
    }

    /// Largest deviation from `full` over `samples`.
    pub fn max_deviation(&self, full: &dyn Fn(&ColumnVector) -> ColumnVector, samples: &[ColumnVector]) -> f64 {
        samples
            .iter()
            .map(|y| self.eval(y).max_abs_diff(&full(y)))
            .fold(0.0, f64::max)
    }
}
