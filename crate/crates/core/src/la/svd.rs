use nalgebra::linalg::SVD;

use super::DenseMatrix;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 10_000;

/// Thin singular value decomposition `A = left · diag(σ) · right_t`.
#[derive(Clone, Debug)]
pub struct SvdResult {
    /// `rows x d`, orthonormal columns.
    pub left: DenseMatrix,
    /// Nonincreasing, nonnegative, length `d = min(rows, cols)`.
    pub singular_values: Vec<f64>,
    /// `d x cols`.
    pub right_t: DenseMatrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> DenseMatrix {
        let mut us = self.left.clone();
        for (j, &s) in self.singular_values.iter().enumerate() {
            us.column_mut(j).iter_mut().for_each(|a| *a *= s);
        }
        us.matmul(&self.right_t)
    }
}

/// Thin SVD with singular values sorted nonincreasing and each left singular
/// vector signed so that its first significant entry is positive.
pub fn svd_thin(a: &DenseMatrix) -> Result<SvdResult> {
    let (rows, cols) = a.shape();
    if rows == 0 || cols == 0 {
        return Err(Error::shape("SVD of an empty matrix"));
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("SVD input".into()));
    }
    let na = a.view().clone_owned();
    let svd = SVD::try_new(na, true, true, f64::EPSILON, MAX_SWEEPS)
        .ok_or(Error::SvdNoConvergence { rows, cols })?;
    let u = DenseMatrix::from_nalgebra(svd.u.expect("left vectors requested"));
    let vt = DenseMatrix::from_nalgebra(svd.v_t.expect("right vectors requested"));
    let sigma: Vec<f64> = svd.singular_values.iter().copied().collect();

    let d = sigma.len();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&x, &y| sigma[y].total_cmp(&sigma[x]));

    let mut left = DenseMatrix::zeros(rows, d);
    let mut right_t = DenseMatrix::zeros(d, cols);
    let mut singular_values = Vec::with_capacity(d);
    for (k, &src) in order.iter().enumerate() {
        let col = u.column(src);
        let sign = sign_of_first_significant(col);
        left.column_mut(k)
            .iter_mut()
            .zip(col)
            .for_each(|(dst, &x)| *dst = sign * x);
        for j in 0..cols {
            right_t[(k, j)] = sign * vt[(src, j)];
        }
        singular_values.push(sigma[src].max(0.0));
    }
    if !left.is_finite() || !right_t.is_finite() {
        return Err(Error::SvdNoConvergence { rows, cols });
    }
    Ok(SvdResult {
        left,
        singular_values,
        right_t,
    })
}

// Entries below this fraction of the column's largest magnitude are treated
// as rounding noise when deciding the sign.
fn sign_of_first_significant(col: &[f64]) -> f64 {
    let scale = col.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let cutoff = 1e-10 * scale;
    match col.iter().find(|x| x.abs() > cutoff) {
        Some(&x) if x < 0.0 => -1.0,
        _ => 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn orthonormality_error(q: &DenseMatrix) -> f64 {
        q.tr_matmul(q).max_abs_diff(&DenseMatrix::identity(q.cols()))
    }

    #[test]
    fn diagonal_matrix() {
        let a = DenseMatrix::from_rows(&[&[3.0, 0.0], &[0.0, 1.0]]);
        let s = svd_thin(&a).unwrap();
        assert_eq!(s.singular_values, vec![3.0, 1.0]);
        for k in 0..2 {
            for i in 0..2 {
                let expected = if i == k { 1.0 } else { 0.0 };
                assert!((s.left[(i, k)].abs() - expected).abs() < 1e-15);
            }
        }
        // Sign convention: first nonzero entry of each left vector is positive.
        assert!(s.left[(0, 0)] > 0.0 && s.left[(1, 1)] > 0.0);
    }

    #[test]
    fn diagonal_matrix_reorders() {
        let a = DenseMatrix::from_rows(&[&[1.0, 0.0], &[0.0, -3.0]]);
        let s = svd_thin(&a).unwrap();
        assert_eq!(s.singular_values, vec![3.0, 1.0]);
        assert!(s.reconstruct().max_abs_diff(&a) < 1e-14);
    }

    #[test]
    fn rank_one() {
        // |u| = 2, |v| = 5
        let u = [2.0 / 3.0_f64.sqrt(); 3];
        let v = [3.0, 4.0, 0.0, 0.0];
        let a = DenseMatrix::from_fn(3, 4, |i, j| u[i] * v[j]);
        let s = svd_thin(&a).unwrap();
        assert!((s.singular_values[0] - 10.0).abs() < 1e-12);
        assert!(s.singular_values[1..].iter().all(|&x| x <= 1e-12));
    }

    #[test]
    fn random_wide_matrix_invariants() {
        let mut rng = StdRng::seed_from_u64(5);
        let a = DenseMatrix::from_fn(20, 30, |_, _| rng.random_range(-1.0..1.0));
        let s = svd_thin(&a).unwrap();
        assert_eq!(s.left.shape(), (20, 20));
        assert_eq!(s.right_t.shape(), (20, 30));
        assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
        assert!(orthonormality_error(&s.left) <= 1e-12);
        let rel = s.reconstruct().max_abs_diff(&a);
        let diff = {
            let mut d = s.reconstruct();
            d.add_scaled(-1.0, &a);
            d.frobenius_norm() / a.frobenius_norm()
        };
        assert!(rel < 1e-12 && diff <= 1e-10);
        let energy: f64 = s.singular_values.iter().map(|x| x * x).sum();
        let fro2 = a.frobenius_norm().powi(2);
        assert!((energy - fro2).abs() <= 1e-10 * fro2);
    }

    #[test]
    fn tall_matrix() {
        let mut rng = StdRng::seed_from_u64(8);
        let a = DenseMatrix::from_fn(40, 7, |_, _| rng.random_range(-1.0..1.0));
        let s = svd_thin(&a).unwrap();
        assert_eq!(s.left.shape(), (40, 7));
        assert!(orthonormality_error(&s.left) <= 1e-12);
        assert!(s.reconstruct().max_abs_diff(&a) <= 1e-12);
    }

    #[test]
    fn rejects_empty_and_nan() {
        assert!(svd_thin(&DenseMatrix::zeros(0, 3)).is_err());
        let mut a = DenseMatrix::identity(2);
        a[(0, 1)] = f64::NAN;
        assert!(matches!(svd_thin(&a), Err(Error::NonFinite(_))));
    }
}
