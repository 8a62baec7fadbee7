use crate::error::{Error, Result};
use crate::la::{ColumnVector, DenseMatrix, LuFactorization};

/// Outcome of a converged Newton solve.
#[derive(Clone, Debug)]
pub struct NewtonSolution {
    pub x: ColumnVector,
    pub iterations: usize,
    pub residual_norm: f64,
}

/// Central-difference Jacobian of `f` at `x` with perturbation
/// `√ε (1 + |x_i|)` per coordinate.
pub fn finite_difference_jacobian(
    f: &dyn Fn(&ColumnVector) -> ColumnVector,
    x: &ColumnVector,
) -> DenseMatrix {
    let n = x.dim();
    let mut cols = Vec::with_capacity(n);
    let mut xp = x.clone();
    for k in 0..n {
        let h = f64::EPSILON.sqrt() * (1.0 + x[k].abs());
        xp[k] = x[k] + h;
        let fp = f(&xp);
        xp[k] = x[k] - h;
        let fm = f(&xp);
        xp[k] = x[k];
        let inv = 1.0 / (2.0 * h);
        cols.push(fp.iter().zip(fm.iter()).map(|(a, b)| (a - b) * inv).collect());
    }
    DenseMatrix::from_columns(&cols)
}

/// Newton's method on `F(x) = 0` with a finite-difference Jacobian.
pub fn newton_solve(
    residual: &dyn Fn(&ColumnVector) -> ColumnVector,
    x0: &ColumnVector,
    tol: f64,
    max_iter: usize,
) -> Result<NewtonSolution> {
    newton_solve_with_jacobian(
        residual,
        &|x: &ColumnVector| finite_difference_jacobian(residual, x),
        x0,
        tol,
        max_iter,
    )
}

/// Residuals within this multiple of `tol` are accepted once Newton stops
/// contracting; this is the roundoff floor of the residual evaluation.
pub const STAGNATION_FACTOR: f64 = 10.0;

/// Newton's method on `F(x) = 0` with a caller-supplied Jacobian. Stops
/// once `|F(x)|₂ ≤ tol`, or once the residual is below
/// `STAGNATION_FACTOR · tol` and failed to halve in the last iteration.
/// The initial guess counts as iteration zero.
pub fn newton_solve_with_jacobian(
    residual: &dyn Fn(&ColumnVector) -> ColumnVector,
    jacobian: &dyn Fn(&ColumnVector) -> DenseMatrix,
    x0: &ColumnVector,
    tol: f64,
    max_iter: usize,
) -> Result<NewtonSolution> {
    let mut x = x0.clone();
    let mut r = residual(&x);
    let mut norm = r.norm();
    let mut iterations = 0;
    while norm > tol {
        if iterations == max_iter || !norm.is_finite() {
            return Err(Error::NewtonNoConvergence {
                iterations,
                residual: norm,
            });
        }
        let lu = LuFactorization::new(&jacobian(&x))?;
        let delta = lu.solve(&r)?;
        x.axpy(-1.0, &delta);
        r = residual(&x);
        let prev = norm;
        norm = r.norm();
        iterations += 1;
        if norm <= STAGNATION_FACTOR * tol && norm > 0.5 * prev {
            break;
        }
    }
    Ok(NewtonSolution {
        x,
        iterations,
        residual_norm: norm,
    })
}
