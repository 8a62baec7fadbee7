use std::collections::BTreeSet;
use std::path::Path;

use super::deim_select;
use crate::error::{Error, Result};
use crate::la::{read_matrix, svd_thin, unvec, write_matrix, ColumnVector, DenseMatrix};
use crate::pod::{csv_err, numerical_rank};
use crate::skewgrad::{EntryEvaluator, SkewGradientSystem};

/// Skewness tolerance for S-snapshots, relative to `max(1, max|S|)`.
pub const SNAPSHOT_SKEW_TOL: f64 = 1e-12;

/// Matrix snapshots restricted to the union of their nonzero positions.
/// Column `k` of `matrix` holds the pattern entries of snapshot `k`.
#[derive(Clone, Debug)]
pub struct CompressedSnapshots {
    pub n: usize,
    /// `(i, j)` pairs ordered by their position `i + j n` in `vec(S)`.
    pub pattern: Vec<(usize, usize)>,
    pub matrix: DenseMatrix,
}

impl CompressedSnapshots {
    pub fn from_dense(snapshots: &[DenseMatrix]) -> Result<Self> {
        let n = match snapshots.first() {
            Some(s) => s.rows(),
            None => return Err(Error::shape("no S-snapshots")),
        };
        let mut builder = Builder::new(n);
        for s in snapshots {
            builder.push(s)?;
        }
        Ok(builder.finish())
    }

    /// Evaluates `S(y)` at each state and compresses on the fly.
    pub fn from_system(sys: &dyn SkewGradientSystem, states: &[ColumnVector]) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::shape("no states for S-snapshots"));
        }
        let mut builder = Builder::new(sys.dim());
        for y in states {
            builder.push(&sys.s_matrix(y))?;
        }
        Ok(builder.finish())
    }

    pub fn p(&self) -> usize {
        self.pattern.len()
    }

    pub fn s(&self) -> usize {
        self.matrix.cols()
    }

    /// Scatters a pattern-length vector back into an `n x n` matrix.
    pub fn expand(&self, values: &[f64]) -> DenseMatrix {
        expand(self.n, &self.pattern, values)
    }
}

struct Builder {
    n: usize,
    columns: Vec<Vec<(usize, f64)>>,
    positions: BTreeSet<usize>,
}

impl Builder {
    fn new(n: usize) -> Self {
        Self {
            n,
            columns: Vec::new(),
            positions: BTreeSet::new(),
        }
    }

    fn push(&mut self, s: &DenseMatrix) -> Result<()> {
        let n = self.n;
        if s.shape() != (n, n) {
            return Err(Error::shape(format!("S-snapshot of shape {:?}, expected {n}x{n}", s.shape())));
        }
        if !s.is_finite() {
            return Err(Error::NonFinite("S-snapshot".into()));
        }
        let asym = s.max_asymmetry();
        if asym > SNAPSHOT_SKEW_TOL * s.max_abs().max(1.0) {
            return Err(Error::NotSkew {
                what: format!("S-snapshot {}", self.columns.len()),
                asymmetry: asym,
            });
        }
        let mut col = Vec::new();
        for (k, &v) in s.as_slice().iter().enumerate() {
            if v != 0.0 {
                col.push((k, v));
                self.positions.insert(k);
                // keep the pattern closed under transposition
                self.positions.insert((k / n) + (k % n) * n);
            }
        }
        self.columns.push(col);
        Ok(())
    }

    fn finish(self) -> CompressedSnapshots {
        let n = self.n;
        let positions: Vec<usize> = self.positions.into_iter().collect();
        let mut matrix = DenseMatrix::zeros(positions.len(), self.columns.len());
        for (c, col) in self.columns.iter().enumerate() {
            let out = matrix.column_mut(c);
            for &(k, v) in col {
                let row = positions.binary_search(&k).expect("position recorded");
                out[row] = v;
            }
        }
        CompressedSnapshots {
            n,
            pattern: positions.iter().map(|&k| (k % n, k / n)).collect(),
            matrix,
        }
    }
}

fn expand(n: usize, pattern: &[(usize, usize)], values: &[f64]) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(n, n);
    for (&(i, j), &v) in pattern.iter().zip(values) {
        out[(i, j)] = v;
    }
    out
}

/// For each pattern position, the position of its transpose.
fn mirror_map(n: usize, pattern: &[(usize, usize)]) -> Result<Vec<usize>> {
    let keys: Vec<usize> = pattern.iter().map(|&(i, j)| i + j * n).collect();
    pattern
        .iter()
        .map(|&(i, j)| {
            keys.binary_search(&(j + i * n))
                .map_err(|_| Error::Config(format!("pattern has ({i}, {j}) but not its transpose")))
        })
        .collect()
}

/// Replaces each column by the compressed form of its skew-symmetric part.
fn antisymmetrize(matrix: &mut DenseMatrix, mirror: &[usize]) {
    for c in 0..matrix.cols() {
        let col = matrix.column_mut(c);
        let orig = col.to_vec();
        for (k, &t) in mirror.iter().enumerate() {
            col[k] = 0.5 * (orig[k] - orig[t]);
        }
    }
}

/// Skew-DEIM approximation `S_r(z) ≈ unvec(W s)`, where `s` holds `m`
/// selected entries of `S(Vz)`.
#[derive(Clone, Debug)]
pub struct SkewDeimOperator {
    pub n: usize,
    pub r: usize,
    pub pattern: Vec<(usize, usize)>,
    /// Skew basis matrices `U_j`, compressed to the pattern (`p x m`).
    pub compressed_basis: DenseMatrix,
    /// Selected rows of the compressed basis (0-based pattern positions).
    pub indices: Vec<usize>,
    /// Matrix positions `(i, j)` of the selected entries.
    pub positions: Vec<(usize, usize)>,
    /// `(V⊗V)ᵀ U (PᵀU)⁻¹`, `r² x m`.
    pub online_tensor_w: DenseMatrix,
    /// State indices read by each selected entry.
    pub entry_dependencies: Vec<Vec<usize>>,
    /// Spectrum of the compressed snapshot matrix (empty when loaded).
    pub snapshot_singular_values: Vec<f64>,
    dep_states: Vec<usize>,
    v_dep: DenseMatrix,
}

impl SkewDeimOperator {
    pub fn build(
        snaps: &CompressedSnapshots,
        m: usize,
        v: &DenseMatrix,
        evaluator: &dyn EntryEvaluator,
    ) -> Result<Self> {
        if v.rows() != snaps.n {
            return Err(Error::shape(format!(
                "basis has {} rows, snapshots are {}x{}",
                v.rows(),
                snaps.n,
                snaps.n
            )));
        }
        if m == 0 || m > snaps.s() {
            return Err(Error::Config(format!(
                "DEIM size m = {m} must lie in 1..={}",
                snaps.s()
            )));
        }
        let svd = svd_thin(&snaps.matrix)?;
        let rank = numerical_rank(&svd.singular_values);
        if m > rank {
            return Err(Error::RankDeficient { requested: m, rank });
        }
        let mut basis = svd.left.leading_columns(m);
        antisymmetrize(&mut basis, &mirror_map(snaps.n, &snaps.pattern)?);
        let sel = deim_select(&basis)?;
        let coeffs = basis.matmul(&sel.lu.inverse()?);
        let w = tensor_w(snaps.n, &snaps.pattern, &coeffs, v);
        let mut op = Self::assemble(snaps.n, snaps.pattern.clone(), basis, sel.indices, w, v, evaluator)?;
        op.snapshot_singular_values = svd.singular_values;
        Ok(op)
    }

    fn assemble(
        n: usize,
        pattern: Vec<(usize, usize)>,
        compressed_basis: DenseMatrix,
        indices: Vec<usize>,
        online_tensor_w: DenseMatrix,
        v: &DenseMatrix,
        evaluator: &dyn EntryEvaluator,
    ) -> Result<Self> {
        let r = v.cols();
        let positions: Vec<(usize, usize)> = indices.iter().map(|&k| pattern[k]).collect();
        let entry_dependencies: Vec<Vec<usize>> =
            positions.iter().map(|&(i, j)| evaluator.dependencies(i, j)).collect();
        let dep_states: Vec<usize> = entry_dependencies
            .iter()
            .flatten()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if dep_states.iter().any(|&i| i >= n) {
            return Err(Error::shape("entry dependency outside the state"));
        }
        let v_dep = v.select_rows(&dep_states);
        Ok(Self {
            n,
            r,
            pattern,
            compressed_basis,
            indices,
            positions,
            online_tensor_w,
            entry_dependencies,
            snapshot_singular_values: Vec::new(),
            dep_states,
            v_dep,
        })
    }

    pub fn m(&self) -> usize {
        self.indices.len()
    }

    /// Rows of `V` needed online; the only state-sized data touched.
    pub fn dependency_states(&self) -> &[usize] {
        &self.dep_states
    }

    /// `U_j` as an `n x n` matrix.
    pub fn basis_matrix(&self, j: usize) -> DenseMatrix {
        expand(self.n, &self.pattern, self.compressed_basis.column(j))
    }

    /// Online evaluation of `S_r(z)`.
    pub fn eval(&self, evaluator: &dyn EntryEvaluator, z: &[f64]) -> Result<DenseMatrix> {
        skew_deim_eval(self, &gather_entries(self, evaluator, z)?)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join("pattern.csv");
        let mut w = csv::Writer::from_path(&path).map_err(|e| csv_err(&path, e))?;
        w.write_record(["i", "j"]).map_err(|e| csv_err(&path, e))?;
        for &(i, j) in &self.pattern {
            w.serialize((i + 1, j + 1)).map_err(|e| csv_err(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;

        let path = dir.join("deim_indices.csv");
        let mut w = csv::Writer::from_path(&path).map_err(|e| csv_err(&path, e))?;
        w.write_record(["index", "i", "j"]).map_err(|e| csv_err(&path, e))?;
        for (&k, &(i, j)) in self.indices.iter().zip(&self.positions) {
            w.serialize((k + 1, i + 1, j + 1)).map_err(|e| csv_err(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;

        write_matrix(dir.join("deim_basis.skm"), &self.compressed_basis)?;
        write_matrix(dir.join("deim_w.skm"), &self.online_tensor_w)
    }

    /// Reads an operator written by [`SkewDeimOperator::write`]; entry
    /// dependencies are recomputed from `evaluator`.
    pub fn read(dir: &Path, v: &DenseMatrix, evaluator: &dyn EntryEvaluator) -> Result<Self> {
        let n = v.rows();
        let r = v.cols();
        let pattern: Vec<(usize, usize)> = read_one_based(&dir.join("pattern.csv"))?
            .into_iter()
            .map(|row: (usize, usize)| (row.0 - 1, row.1 - 1))
            .collect();
        if pattern.iter().any(|&(i, j)| i >= n || j >= n) {
            return Err(parse_err(&dir.join("pattern.csv"), "pattern entry outside the state"));
        }
        let indices: Vec<usize> = read_one_based(&dir.join("deim_indices.csv"))?
            .into_iter()
            .map(|row: (usize, usize, usize)| row.0 - 1)
            .collect();
        let basis = read_matrix(dir.join("deim_basis.skm"))?;
        let w = read_matrix(dir.join("deim_w.skm"))?;
        let m = indices.len();
        if basis.shape() != (pattern.len(), m) || w.shape() != (r * r, m) {
            return Err(Error::shape(format!(
                "DEIM files disagree: pattern {}, indices {m}, basis {:?}, W {:?}, r {r}",
                pattern.len(),
                basis.shape(),
                w.shape()
            )));
        }
        if indices.iter().any(|&k| k >= pattern.len()) {
            return Err(parse_err(&dir.join("deim_indices.csv"), "index outside the pattern"));
        }
        Self::assemble(n, pattern, basis, indices, w, v, evaluator)
    }
}

fn parse_err(path: &Path, detail: &str) -> Error {
    Error::Parse {
        what: path.display().to_string(),
        detail: detail.into(),
    }
}

fn read_one_based<T: serde::de::DeserializeOwned + OneBased>(path: &Path) -> Result<Vec<T>> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut out = Vec::new();
    for row in rd.deserialize() {
        let row: T = row.map_err(|e| csv_err(path, e))?;
        if !row.all_positive() {
            return Err(parse_err(path, "indices are 1-based"));
        }
        out.push(row);
    }
    Ok(out)
}

trait OneBased {
    fn all_positive(&self) -> bool;
}

impl OneBased for (usize, usize) {
    fn all_positive(&self) -> bool {
        self.0 > 0 && self.1 > 0
    }
}

impl OneBased for (usize, usize, usize) {
    fn all_positive(&self) -> bool {
        self.0 > 0 && self.1 > 0 && self.2 > 0
    }
}

/// Column `j` is `vec` of the skew part of `Vᵀ B_j V`, with `B_j` the
/// expansion of column `j` of `coeffs`.
fn tensor_w(n: usize, pattern: &[(usize, usize)], coeffs: &DenseMatrix, v: &DenseMatrix) -> DenseMatrix {
    let r = v.cols();
    let m = coeffs.cols();
    let rows: Vec<Vec<f64>> = (0..n).map(|i| v.row(i)).collect();
    let mut w = DenseMatrix::zeros(r * r, m);
    for c in 0..m {
        let b = coeffs.column(c);
        let mut a = DenseMatrix::zeros(r, r);
        for (&(i, j), &val) in pattern.iter().zip(b) {
            if val == 0.0 {
                continue;
            }
            let (vi, vj) = (&rows[i], &rows[j]);
            for (q, &vjq) in vj.iter().enumerate() {
                let s = val * vjq;
                let col = a.column_mut(q);
                for (p, &vip) in vi.iter().enumerate() {
                    col[p] += vip * s;
                }
            }
        }
        w.column_mut(c).copy_from_slice(a.skew_part().as_slice());
    }
    w
}

/// Evaluates the `m` selected entries of `S(Vz)`, reading only the state
/// coefficients listed in the operator's entry dependencies.
pub fn gather_entries(op: &SkewDeimOperator, evaluator: &dyn EntryEvaluator, z: &[f64]) -> Result<ColumnVector> {
    if z.len() != op.r {
        return Err(Error::shape(format!("reduced state of length {}, expected {}", z.len(), op.r)));
    }
    let y_dep = op.v_dep.matvec(z);
    let lookup = |i: usize| match op.dep_states.binary_search(&i) {
        Ok(k) => y_dep[k],
        Err(_) => f64::NAN,
    };
    let s: ColumnVector = op.positions.iter().map(|&(i, j)| evaluator.entry(i, j, &lookup)).collect();
    if !s.is_finite() {
        return Err(Error::NonFinite(
            "selected S entries (evaluator read an undeclared state?)".into(),
        ));
    }
    Ok(s)
}

/// `unvec(W s, r, r)`; exactly skew-symmetric since every column of `W` is.
pub fn skew_deim_eval(op: &SkewDeimOperator, s_entries: &[f64]) -> Result<DenseMatrix> {
    if s_entries.len() != op.m() {
        return Err(Error::shape(format!(
            "{} entries for {} DEIM indices",
            s_entries.len(),
            op.m()
        )));
    }
    unvec(&op.online_tensor_w.matvec(s_entries), op.r, op.r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::la::apply_kron_transpose;
    use crate::problems::{central_diff_ops, mkdv_system, D2Scaling, GridConfig, MkdvSystem};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn random_skew(rng: &mut StdRng, n: usize) -> DenseMatrix {
        let a = DenseMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        a.skew_part()
    }

    fn random_basis(rng: &mut StdRng, n: usize, r: usize) -> DenseMatrix {
        svd_thin(&DenseMatrix::from_fn(n, r, |_, _| rng.random_range(-1.0..1.0))).unwrap().left
    }

    /// Evaluator over a fixed linear combination of skew matrices; every
    /// entry depends on state 0 only.
    struct Synthetic {
        mats: Vec<DenseMatrix>,
    }

    impl Synthetic {
        fn dense(&self, t: f64) -> DenseMatrix {
            let mut out = DenseMatrix::zeros(self.mats[0].rows(), self.mats[0].cols());
            for (k, m) in self.mats.iter().enumerate() {
                out.add_scaled(t.powi(k as i32), m);
            }
            out
        }
    }

    impl EntryEvaluator for Synthetic {
        fn dependencies(&self, _i: usize, _j: usize) -> Vec<usize> {
            vec![0]
        }

        fn entry(&self, i: usize, j: usize, state: &dyn Fn(usize) -> f64) -> f64 {
            self.dense(state(0))[(i, j)]
        }
    }

    fn mkdv(n: usize) -> MkdvSystem {
        let grid = GridConfig::new(10.0, n).unwrap();
        mkdv_system(grid, central_diff_ops(&grid, D2Scaling::Standard).unwrap())
    }

    #[test]
    fn compression_keeps_union_pattern() {
        let a = DenseMatrix::from_rows(&[&[0.0, 2.0, 0.0], &[-2.0, 0.0, 0.0], &[0.0, 0.0, 0.0]]);
        let b = DenseMatrix::from_rows(&[&[0.0, 0.0, 1.0], &[0.0, 0.0, 0.0], &[-1.0, 0.0, 0.0]]);
        let c = CompressedSnapshots::from_dense(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(c.pattern, vec![(1, 0), (2, 0), (0, 1), (0, 2)]);
        assert_eq!(c.matrix.column(0), &[-2.0, 0.0, 2.0, 0.0]);
        assert_eq!(c.expand(c.matrix.column(0)), a);
        assert_eq!(c.expand(c.matrix.column(1)), b);
    }

    #[test]
    fn non_skew_snapshot_rejected() {
        let a = DenseMatrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert!(matches!(CompressedSnapshots::from_dense(&[a]), Err(Error::NotSkew { .. })));
    }

    #[test]
    fn single_snapshot_normalises() {
        let mut rng = StdRng::seed_from_u64(40);
        let s1 = random_skew(&mut rng, 5);
        let snaps = CompressedSnapshots::from_dense(&[s1.clone()]).unwrap();
        let v = random_basis(&mut rng, 5, 2);
        let ev = Synthetic { mats: vec![s1.clone()] };
        let op = SkewDeimOperator::build(&snaps, 1, &v, &ev).unwrap();
        let u = op.basis_matrix(0);
        let scaled = s1.scaled(1.0 / s1.frobenius_norm());
        let diff = u.max_abs_diff(&scaled).min(u.max_abs_diff(&scaled.scaled(-1.0)));
        assert!(diff < 1e-14);
        assert_eq!(u.max_asymmetry(), 0.0);
    }

    #[test]
    fn tensor_matches_kronecker_route() {
        let mut rng = StdRng::seed_from_u64(41);
        let n = 7;
        let mats: Vec<DenseMatrix> = (0..4).map(|_| random_skew(&mut rng, n)).collect();
        let snaps = CompressedSnapshots::from_dense(&mats).unwrap();
        let v = random_basis(&mut rng, n, 3);
        let ev = Synthetic { mats: mats.clone() };
        let op = SkewDeimOperator::build(&snaps, 3, &v, &ev).unwrap();

        let pu = op.compressed_basis.select_rows(&op.indices);
        let coeffs = op.compressed_basis.matmul(&crate::la::LuFactorization::new(&pu).unwrap().inverse().unwrap());
        for c in 0..3 {
            let full = snaps.expand(coeffs.column(c));
            let kron = apply_kron_transpose(&v, &v, full.as_slice()).unwrap();
            assert!(kron.max_abs_diff(op.online_tensor_w.column(c)) < 1e-12);
        }
    }

    #[test]
    fn in_span_evaluation_is_exact() {
        let mut rng = StdRng::seed_from_u64(42);
        let n = 8;
        let mats: Vec<DenseMatrix> = (0..3).map(|_| random_skew(&mut rng, n)).collect();
        let ev = Synthetic { mats };
        let snaps_dense: Vec<DenseMatrix> = [0.3, -1.1, 0.7, 1.9, -0.4].iter().map(|&t| ev.dense(t)).collect();
        let snaps = CompressedSnapshots::from_dense(&snaps_dense).unwrap();
        let v = random_basis(&mut rng, n, 4);
        let op = SkewDeimOperator::build(&snaps, 3, &v, &ev).unwrap();
        for _ in 0..10 {
            let z: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y0 = v.matvec(&z)[0];
            let exact = v.tr_matmul(&ev.dense(y0)).matmul(&v);
            let got = op.eval(&ev, &z).unwrap();
            assert!(got.max_abs_diff(&exact) <= 1e-10 * (1.0 + exact.max_abs()));
        }
    }

    #[test]
    fn zero_entries_give_zero() {
        let mut rng = StdRng::seed_from_u64(43);
        let mats: Vec<DenseMatrix> = (0..2).map(|_| random_skew(&mut rng, 5)).collect();
        let snaps = CompressedSnapshots::from_dense(&mats).unwrap();
        let v = random_basis(&mut rng, 5, 2);
        let op = SkewDeimOperator::build(&snaps, 2, &v, &Synthetic { mats }).unwrap();
        assert_eq!(skew_deim_eval(&op, &[0.0, 0.0]).unwrap(), DenseMatrix::zeros(2, 2));
        assert!(skew_deim_eval(&op, &[0.0]).is_err());
    }

    fn mkdv_operator(n: usize, r: usize, m: usize) -> (MkdvSystem, SkewDeimOperator) {
        let sys = mkdv(n);
        let mut rng = StdRng::seed_from_u64(44);
        let states: Vec<ColumnVector> = (0..3 * m)
            .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let snaps = CompressedSnapshots::from_system(&sys, &states).unwrap();
        let v = random_basis(&mut rng, n, r);
        let op = SkewDeimOperator::build(&snaps, m, &v, &sys).unwrap();
        (sys, op)
    }

    #[test]
    fn mkdv_pattern_and_skewness() {
        let (sys, op) = mkdv_operator(64, 10, 10);
        assert_eq!(op.pattern.len(), 4 * 64);
        for j in 0..op.m() {
            assert!(op.basis_matrix(j).max_asymmetry() <= 1e-12);
        }
        let mut rng = StdRng::seed_from_u64(45);
        for _ in 0..20 {
            let z: Vec<f64> = (0..10).map(|_| rng.random_range(-3.0..3.0)).collect();
            assert_eq!(op.eval(&sys, &z).unwrap().max_asymmetry(), 0.0);
        }
    }

    struct Counting<'a> {
        inner: &'a MkdvSystem,
        entries: AtomicUsize,
        reads: AtomicUsize,
    }

    impl EntryEvaluator for Counting<'_> {
        fn dependencies(&self, i: usize, j: usize) -> Vec<usize> {
            self.inner.dependencies(i, j)
        }

        fn entry(&self, i: usize, j: usize, state: &dyn Fn(usize) -> f64) -> f64 {
            self.entries.fetch_add(1, Ordering::Relaxed);
            let counted = |k: usize| {
                self.reads.fetch_add(1, Ordering::Relaxed);
                state(k)
            };
            self.inner.entry(i, j, &counted)
        }
    }

    #[test]
    fn online_cost_independent_of_n() {
        let mut counts = Vec::new();
        for n in [64, 128] {
            let (sys, op) = mkdv_operator(n, 6, 6);
            let ev = Counting {
                inner: &sys,
                entries: AtomicUsize::new(0),
                reads: AtomicUsize::new(0),
            };
            op.eval(&ev, &[0.1, -0.2, 0.3, 0.0, 0.5, 1.0]).unwrap();
            assert!(op.dependency_states().len() <= 2 * op.m());
            counts.push((ev.entries.into_inner(), ev.reads.into_inner()));
        }
        assert_eq!(counts[0].0, 6);
        assert_eq!(counts[0].0, counts[1].0);
        assert!(counts.iter().all(|c| c.1 <= 2 * 6));
    }

    #[test]
    fn write_read_round_trip() {
        let (sys, op) = mkdv_operator(32, 4, 5);
        let dir = tempfile::tempdir().unwrap();
        op.write(dir.path()).unwrap();
        // W depends on V only through the stored tensor; reuse the same V rows
        let v = DenseMatrix::zeros(32, 4);
        let back = SkewDeimOperator::read(dir.path(), &v, &sys).unwrap();
        assert_eq!(back.pattern, op.pattern);
        assert_eq!(back.indices, op.indices);
        assert_eq!(back.positions, op.positions);
        assert_eq!(back.online_tensor_w, op.online_tensor_w);
        assert_eq!(back.entry_dependencies, op.entry_dependencies);
    }
}
