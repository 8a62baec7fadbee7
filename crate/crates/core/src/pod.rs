//! Snapshot assembly and POD basis extraction.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrators::Trajectory;
use crate::la::{svd_thin, write_matrix, DenseMatrix};
use crate::skewgrad::SkewGradientSystem;

/// Singular values at or below this fraction of `σ₁` count as zero.
pub const RANK_CUTOFF: f64 = 1e-14;

#[derive(Clone, Debug)]
pub struct SnapshotSet {
    pub matrix: DenseMatrix,
    pub n_state_snapshots: usize,
    pub augmented: bool,
    pub mu: f64,
}

/// Stacks the recorded states of `traj` (including the initial state) as
/// columns, optionally followed by `μ∇H(y_j)` for each state.
pub fn assemble_snapshots(
    traj: &Trajectory,
    sys: &dyn SkewGradientSystem,
    augment: bool,
    mu: f64,
) -> Result<SnapshotSet> {
    if traj.is_empty() {
        return Err(Error::shape("empty trajectory"));
    }
    if augment && !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::Config(format!("gradient weight mu must be positive, got {mu}")));
    }
    let mut cols = traj.states.clone();
    if augment {
        for y in &traj.states {
            cols.push(sys.grad_h(y).scaled(mu));
        }
    }
    let matrix = DenseMatrix::from_columns(&cols);
    Ok(SnapshotSet {
        matrix,
        n_state_snapshots: traj.len(),
        augmented: augment,
        mu,
    })
}

impl SnapshotSet {
    pub fn from_matrix(matrix: DenseMatrix) -> Self {
        let s = matrix.cols();
        Self {
            matrix,
            n_state_snapshots: s,
            augmented: false,
            mu: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    FixedRank(usize),
    /// Smallest `r` whose discarded energy fraction is below the threshold.
    Energy(f64),
}

#[derive(Clone, Debug)]
pub struct PodBasis {
    pub v: DenseMatrix,
    pub retained_singular_values: Vec<f64>,
    /// Full spectrum of the snapshot matrix.
    pub singular_values: Vec<f64>,
    pub discarded_energy: f64,
    pub epsilon: Option<f64>,
}

impl PodBasis {
    pub fn r(&self) -> usize {
        self.v.cols()
    }

    pub fn n(&self) -> usize {
        self.v.rows()
    }

    /// Wraps a matrix with orthonormal columns, e.g. a basis read back
    /// from disk. No spectrum is attached.
    pub fn from_orthonormal(v: DenseMatrix) -> Result<Self> {
        let r = v.cols();
        let dev = v.tr_matmul(&v).max_abs_diff(&DenseMatrix::identity(r));
        if dev > 1e-10 {
            return Err(Error::shape(format!(
                "basis columns are not orthonormal (|VᵀV - I| = {dev:.3e})"
            )));
        }
        Ok(Self {
            v,
            retained_singular_values: Vec::new(),
            singular_values: Vec::new(),
            discarded_energy: f64::NAN,
            epsilon: None,
        })
    }

    pub fn write_singular_values(&self, path: &Path) -> Result<()> {
        write_singular_values(path, &self.singular_values)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_matrix(&dir.join("v.skm"), &self.v)?;
        self.write_singular_values(&dir.join("singular_values.csv"))
    }
}

/// Writes `index,sigma` rows with 1-based indices.
pub fn write_singular_values(path: &Path, sigma: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["index", "sigma"]).map_err(|e| csv_err(path, e))?;
    for (k, s) in sigma.iter().enumerate() {
        w.write_record([(k + 1).to_string(), format!("{s:e}")])
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            what: path.display().to_string(),
            detail: format!("{other:?}"),
        },
    }
}

/// Number of singular values above the rank cutoff.
pub fn numerical_rank(sigma: &[f64]) -> usize {
    match sigma.first() {
        Some(&s1) if s1 > 0.0 => sigma.iter().take_while(|&&s| s > RANK_CUTOFF * s1).count(),
        _ => 0,
    }
}

/// Leading left singular vectors of the snapshot matrix.
pub fn pod_basis(snap: &SnapshotSet, truncation: Truncation) -> Result<PodBasis> {
    let svd = svd_thin(&snap.matrix)?;
    let sigma = svd.singular_values;
    let rank = numerical_rank(&sigma);
    let total: f64 = sigma.iter().map(|s| s * s).sum();
    let tail = |r: usize| -> f64 { sigma[r..].iter().map(|s| s * s).sum::<f64>() };

    let (r, epsilon) = match truncation {
        Truncation::FixedRank(r) => {
            if r == 0 || r > rank {
                return Err(Error::RankDeficient { requested: r, rank });
            }
            (r, None)
        }
        Truncation::Energy(eps) => {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(Error::Config(format!("energy threshold must lie in (0, 1), got {eps}")));
            }
            if rank == 0 {
                return Err(Error::RankDeficient { requested: 1, rank });
            }
            let r = (1..=sigma.len()).find(|&r| tail(r) / total < eps).unwrap_or(sigma.len());
            (r.min(rank), Some(eps))
        }
    };

    Ok(PodBasis {
        v: svd.left.leading_columns(r),
        retained_singular_values: sigma[..r].to_vec(),
        discarded_energy: if total > 0.0 { tail(r) / total } else { 0.0 },
        singular_values: sigma,
        epsilon,
    })
}

/// `Σ_j |y_j - V Vᵀ y_j|²` over the columns of `y`.
pub fn projection_residual(y: &DenseMatrix, v: &DenseMatrix) -> Result<f64> {
    if v.rows() != y.rows() {
        return Err(Error::shape(format!(
            "basis has {} rows, snapshots have {}",
            v.rows(),
            y.rows()
        )));
    }
    let mut total = 0.0;
    for j in 0..y.cols() {
        let col = y.column_vector(j);
        let proj = v.matvec(&v.tr_matvec(&col));
        total += col.sub(&proj).iter().map(|e| e * e).sum::<f64>();
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrators::Trajectory;
    use crate::la::ColumnVector;
    use crate::skewgrad::FnSystem;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random(rng: &mut StdRng, rows: usize, cols: usize) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    fn traj(states: Vec<ColumnVector>) -> Trajectory {
        Trajectory {
            times: (0..states.len()).map(|k| k as f64).collect(),
            energies: vec![0.0; states.len()],
            states,
        }
    }

    fn identity_gradient(n: usize) -> FnSystem {
        FnSystem::constant_quadratic(DenseMatrix::zeros(n, n))
    }

    #[test]
    fn assemble_plain_and_augmented() {
        let states: Vec<ColumnVector> = (0..3).map(|k| ColumnVector::from(vec![k as f64, 1.0])).collect();
        let sys = identity_gradient(2);
        let plain = assemble_snapshots(&traj(states.clone()), &sys, false, 1.0).unwrap();
        assert_eq!(plain.matrix.shape(), (2, 3));
        assert_eq!(plain.n_state_snapshots, 3);

        let aug = assemble_snapshots(&traj(states.clone()), &sys, true, 2.0).unwrap();
        assert_eq!(aug.matrix.shape(), (2, 6));
        for k in 0..3 {
            assert_eq!(aug.matrix.column(3 + k), states[k].scaled(2.0).as_slice());
        }
    }

    #[test]
    fn augmentation_with_identity_gradient_keeps_column_space() {
        let mut rng = StdRng::seed_from_u64(4);
        let states: Vec<ColumnVector> = (0..4).map(|_| random(&mut rng, 6, 1).column_vector(0)).collect();
        let sys = identity_gradient(6);
        let plain = assemble_snapshots(&traj(states.clone()), &sys, false, 1.0).unwrap();
        let aug = assemble_snapshots(&traj(states), &sys, true, 1.0).unwrap();
        let b = pod_basis(&plain, Truncation::FixedRank(4)).unwrap();
        assert!(projection_residual(&aug.matrix, &b.v).unwrap() < 1e-20);
    }

    #[test]
    fn empty_trajectory_rejected() {
        let sys = identity_gradient(2);
        assert!(assemble_snapshots(&Trajectory::default(), &sys, false, 1.0).is_err());
    }

    #[test]
    fn rank_one_snapshots() {
        let u = [1.0, -2.0, 2.0];
        let y = DenseMatrix::from_fn(3, 5, |i, j| u[i] * (j as f64 + 1.0));
        let snap = SnapshotSet::from_matrix(y);
        let b = pod_basis(&snap, Truncation::FixedRank(1)).unwrap();
        for i in 0..3 {
            assert!((b.v[(i, 0)] - u[i] / 3.0).abs() < 1e-14);
        }
        assert!(matches!(
            pod_basis(&snap, Truncation::FixedRank(2)),
            Err(Error::RankDeficient { requested: 2, rank: 1 })
        ));
        assert_eq!(pod_basis(&snap, Truncation::Energy(1e-3)).unwrap().r(), 1);
    }

    #[test]
    fn optimality_identity() {
        let mut rng = StdRng::seed_from_u64(20);
        let y = random(&mut rng, 20, 30);
        let snap = SnapshotSet::from_matrix(y.clone());
        let b = pod_basis(&snap, Truncation::FixedRank(5)).unwrap();
        let expected: f64 = b.singular_values[5..].iter().map(|s| s * s).sum();
        let got = projection_residual(&y, &b.v).unwrap();
        assert!((got - expected).abs() <= 1e-9 * expected);
        assert!((b.discarded_energy - expected / y.frobenius_norm().powi(2)).abs() < 1e-12);
    }

    #[test]
    fn residual_monotone_and_basis_orthonormal() {
        let mut rng = StdRng::seed_from_u64(21);
        let y = random(&mut rng, 12, 9);
        let snap = SnapshotSet::from_matrix(y.clone());
        let mut prev = f64::INFINITY;
        for r in 1..=9 {
            let b = pod_basis(&snap, Truncation::FixedRank(r)).unwrap();
            assert!(b.v.tr_matmul(&b.v).max_abs_diff(&DenseMatrix::identity(r)) <= 1e-12);
            let res = projection_residual(&y, &b.v).unwrap();
            assert!(res <= prev);
            prev = res;
        }
        assert!(prev <= 1e-10 * y.frobenius_norm().powi(2));
    }

    #[test]
    fn empty_basis_leaves_everything() {
        let mut rng = StdRng::seed_from_u64(22);
        let y = random(&mut rng, 5, 4);
        let got = projection_residual(&y, &DenseMatrix::zeros(5, 0)).unwrap();
        assert!((got - y.frobenius_norm().powi(2)).abs() < 1e-12);
    }

    #[test]
    fn energy_truncation_picks_smallest_rank() {
        let y = DenseMatrix::diag(&[10.0, 1.0, 0.1, 0.01]);
        let snap = SnapshotSet::from_matrix(y);
        // tails: r=1 → 1.0101/101.0101 ≈ 1e-2, r=2 → 1.01e-4
        assert_eq!(pod_basis(&snap, Truncation::Energy(0.02)).unwrap().r(), 1);
        assert_eq!(pod_basis(&snap, Truncation::Energy(0.005)).unwrap().r(), 2);
        assert!(pod_basis(&snap, Truncation::Energy(1.5)).is_err());
    }
}
