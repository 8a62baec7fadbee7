//! Periodic central-difference semi-discretizations of the KdV and
//! modified KdV equations as skew-gradient systems with `H(y) = ½ yᵀy`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::la::{ColumnVector, DenseMatrix};
use crate::skewgrad::{AffineSkew, EntryEvaluator, SKind, SkewGradientSystem};

/// Uniform grid on a torus of length `length` with `n` points at
/// `offset + i·dx`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub length: f64,
    pub n: usize,
    pub dx: f64,
    pub offset: f64,
}

impl GridConfig {
    /// Grid centred on the origin (`offset = -length/2`).
    pub fn new(length: f64, n: usize) -> Result<Self> {
        Self::with_offset(length, n, -0.5 * length)
    }

    pub fn with_offset(length: f64, n: usize, offset: f64) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) || n == 0 || !offset.is_finite() {
            return Err(Error::Config(format!(
                "invalid grid: length {length}, n {n}, offset {offset}"
            )));
        }
        Ok(Self {
            length,
            n,
            dx: length / n as f64,
            offset,
        })
    }

    pub fn x(&self, i: usize) -> f64 {
        self.offset + i as f64 * self.dx
    }
}

/// Normalisation of the second-difference operator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum D2Scaling {
    /// `1/Δx²`, the consistent second-derivative approximation.
    #[default]
    Standard,
    /// `1/(2Δx)`, kept to reproduce the operator exactly as printed.
    PaperLiteral,
}

/// Sparse circulant operator given by `(offset, coefficient)` pairs:
/// `(Cx)_i = Σ c · x_{(i + offset) mod n}`.
#[derive(Clone, Debug, PartialEq)]
pub struct CirculantStencil {
    n: usize,
    taps: Vec<(usize, f64)>,
}

impl CirculantStencil {
    /// Reads the stencil from the first row of a circulant matrix.
    fn from_first_row(m: &DenseMatrix) -> Self {
        let n = m.rows();
        let taps = (0..n)
            .filter(|&k| m[(0, k)] != 0.0)
            .map(|k| (k, m[(0, k)]))
            .collect();
        Self { n, taps }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|i| {
                self.taps
                    .iter()
                    .map(|&(k, c)| c * x[(i + k) % n])
                    .sum()
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct DifferenceOperators {
    pub d1: DenseMatrix,
    pub d2: DenseMatrix,
    pub d3: DenseMatrix,
    pub d2_scaling: D2Scaling,
    d1_stencil: CirculantStencil,
    d3_stencil: CirculantStencil,
}

fn circulant(n: usize, scale: f64, taps: &[(isize, f64)]) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for &(off, c) in taps {
            let j = (i as isize + off).rem_euclid(n as isize) as usize;
            m[(i, j)] += scale * c;
        }
    }
    m
}

/// Periodic first difference `(y_{i+1} - y_{i-1}) / (2Δx)`. Needs `n ≥ 3`.
pub fn central_d1(n: usize, dx: f64) -> Result<DenseMatrix> {
    if n < 3 {
        return Err(Error::StencilOverlap(n));
    }
    Ok(circulant(n, 1.0 / (2.0 * dx), &[(1, 1.0), (-1, -1.0)]))
}

/// `D1`, `D2` and `D3 = D1 D2` on a periodic grid. Needs `n ≥ 5` so that
/// the five-point stencil of `D3` does not wrap onto itself.
pub fn central_diff_ops(grid: &GridConfig, d2_scaling: D2Scaling) -> Result<DifferenceOperators> {
    let n = grid.n;
    if n < 5 {
        return Err(Error::StencilOverlap(n));
    }
    let d1 = central_d1(n, grid.dx)?;
    let kappa = match d2_scaling {
        D2Scaling::Standard => 1.0 / (grid.dx * grid.dx),
        D2Scaling::PaperLiteral => 1.0 / (2.0 * grid.dx),
    };
    let d1_taps = [(1, 1.0 / (2.0 * grid.dx)), (-1, -1.0 / (2.0 * grid.dx))];
    let d2_taps = [(-1, kappa), (0, -2.0 * kappa), (1, kappa)];
    let d2 = circulant(n, 1.0, &d2_taps);
    // the product of circulants is the circulant of the convolved taps;
    // forming it this way keeps D3 exactly skew with a zero diagonal
    let mut d3_taps: Vec<(isize, f64)> = Vec::new();
    for &(o1, c1) in &d1_taps {
        for &(o2, c2) in &d2_taps {
            match d3_taps.iter_mut().find(|t| t.0 == o1 + o2) {
                Some(t) => t.1 += c1 * c2,
                None => d3_taps.push((o1 + o2, c1 * c2)),
            }
        }
    }
    let d3 = circulant(n, 1.0, &d3_taps);
    Ok(DifferenceOperators {
        d1_stencil: CirculantStencil::from_first_row(&d1),
        d3_stencil: CirculantStencil::from_first_row(&d3),
        d1,
        d2,
        d3,
        d2_scaling,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Kdv,
    Mkdv,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Kdv => "kdv",
            ProblemKind::Mkdv => "mkdv",
        }
    }
}

/// Samples the solitary-wave initial profile at the grid points:
/// `2·1.5² sech²(1.5x)` for KdV and `√c sech(√c x)`, `c = 4`, for mKdV.
pub fn initial_profile(problem: ProblemKind, grid: &GridConfig) -> ColumnVector {
    (0..grid.n).map(|i| profile_value(problem, grid.x(i))).collect()
}

/// The initial profile of `problem` at position `x`.
pub fn profile_value(problem: ProblemKind, x: f64) -> f64 {
    let sech = |x: f64| 1.0 / x.cosh();
    match problem {
        ProblemKind::Kdv => 2.0 * 1.5 * 1.5 * sech(1.5 * x).powi(2),
        ProblemKind::Mkdv => {
            let c: f64 = 4.0;
            c.sqrt() * sech(c.sqrt() * x)
        }
    }
}

/// Builds the system for `problem` on `grid`.
pub fn build_system(
    problem: ProblemKind,
    grid: &GridConfig,
    d2_scaling: D2Scaling,
) -> Result<Box<dyn SkewGradientSystem>> {
    let ops = central_diff_ops(grid, d2_scaling)?;
    Ok(match problem {
        ProblemKind::Kdv => Box::new(kdv_system(*grid, ops)),
        ProblemKind::Mkdv => Box::new(mkdv_system(*grid, ops)),
    })
}

/// `S(y) = -(2(Y D1 + D1 Y) + D3)`.
#[derive(Clone, Debug)]
pub struct KdvSystem {
    grid: GridConfig,
    ops: DifferenceOperators,
    affine: AffineSkew,
}

pub fn kdv_system(grid: GridConfig, ops: DifferenceOperators) -> KdvSystem {
    let affine = AffineSkew {
        d: ops.d1.scaled(-2.0),
        d_const: Some(ops.d3.scaled(-1.0)),
    };
    KdvSystem { grid, ops, affine }
}

/// `S(y) = -(3/2 (Y² D1 + D1 Y²) + D3)`.
#[derive(Clone, Debug)]
pub struct MkdvSystem {
    grid: GridConfig,
    ops: DifferenceOperators,
}

pub fn mkdv_system(grid: GridConfig, ops: DifferenceOperators) -> MkdvSystem {
    MkdvSystem { grid, ops }
}

impl KdvSystem {
    pub fn grid(&self) -> &GridConfig {
        &self.grid
    }

    pub fn ops(&self) -> &DifferenceOperators {
        &self.ops
    }
}

impl MkdvSystem {
    pub fn grid(&self) -> &GridConfig {
        &self.grid
    }

    pub fn ops(&self) -> &DifferenceOperators {
        &self.ops
    }
}

fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

/// `-(coef·(diag(w) D1 + D1 diag(w)) + D3)` as a dense matrix.
fn dense_s(ops: &DifferenceOperators, coef: f64, w: &[f64]) -> DenseMatrix {
    let d1 = &ops.d1;
    let d3 = &ops.d3;
    DenseMatrix::from_fn(w.len(), w.len(), |i, j| {
        -(coef * (w[i] + w[j]) * d1[(i, j)] + d3[(i, j)])
    })
}

/// `-(coef·(diag(w) D1 g + D1 (w∘g)) + D3 g)` in O(n) via the stencils.
fn stencil_field(ops: &DifferenceOperators, coef: f64, w: &[f64], g: &[f64]) -> ColumnVector {
    let d1g = ops.d1_stencil.apply(g);
    let d1wg = ops.d1_stencil.apply(&mul(w, g));
    let d3g = ops.d3_stencil.apply(g);
    (0..g.len())
        .map(|i| -(coef * (w[i] * d1g[i] + d1wg[i]) + d3g[i]))
        .collect()
}

/// Jacobian of `y ↦ -(coef(diag(w(y)) D1 y + D1 (w(y)∘y)) + D3 y)` where
/// `w = y^p`. `dw` is `dw_i/dy_i` and `dwy` is `d(w_i y_i)/dy_i`.
fn stencil_jacobian(
    ops: &DifferenceOperators,
    coef: f64,
    w: &[f64],
    dw: &[f64],
    dwy: &[f64],
    y: &[f64],
) -> DenseMatrix {
    let n = y.len();
    let d1y = ops.d1_stencil.apply(y);
    let d1 = &ops.d1;
    let d3 = &ops.d3;
    DenseMatrix::from_fn(n, n, |i, j| {
        let diag = if i == j { dw[i] * d1y[i] } else { 0.0 };
        -(coef * (diag + w[i] * d1[(i, j)] + d1[(i, j)] * dwy[j]) + d3[(i, j)])
    })
}

fn entry_dependencies(d1: &DenseMatrix, i: usize, j: usize) -> Vec<usize> {
    if d1[(i, j)] == 0.0 {
        Vec::new()
    } else if i == j {
        vec![i]
    } else {
        vec![i, j]
    }
}

impl SkewGradientSystem for KdvSystem {
    fn dim(&self) -> usize {
        self.grid.n
    }

    fn s_matrix(&self, y: &ColumnVector) -> DenseMatrix {
        dense_s(&self.ops, 2.0, y)
    }

    fn grad_h(&self, y: &ColumnVector) -> ColumnVector {
        y.clone()
    }

    fn energy(&self, y: &ColumnVector) -> f64 {
        0.5 * y.dot(y)
    }

    fn s_kind(&self) -> SKind {
        SKind::AffineInY
    }

    fn entries(&self) -> Option<&dyn EntryEvaluator> {
        Some(self)
    }

    fn affine_skew(&self) -> Option<&AffineSkew> {
        Some(&self.affine)
    }

    fn gradient_is_identity(&self) -> bool {
        true
    }

    fn vector_field(&self, y: &ColumnVector) -> ColumnVector {
        stencil_field(&self.ops, 2.0, y, y)
    }

    fn vector_field_jacobian(&self, y: &ColumnVector) -> Option<DenseMatrix> {
        let ones = vec![1.0; y.dim()];
        let two_y: Vec<f64> = y.iter().map(|v| 2.0 * v).collect();
        Some(stencil_jacobian(&self.ops, 2.0, y, &ones, &two_y, y))
    }
}

impl EntryEvaluator for KdvSystem {
    fn dependencies(&self, i: usize, j: usize) -> Vec<usize> {
        entry_dependencies(&self.ops.d1, i, j)
    }

    fn entry(&self, i: usize, j: usize, state: &dyn Fn(usize) -> f64) -> f64 {
        let d1 = self.ops.d1[(i, j)];
        let lin = if d1 == 0.0 { 0.0 } else { 2.0 * (state(i) + state(j)) * d1 };
        -(lin + self.ops.d3[(i, j)])
    }
}

impl SkewGradientSystem for MkdvSystem {
    fn dim(&self) -> usize {
        self.grid.n
    }

    fn s_matrix(&self, y: &ColumnVector) -> DenseMatrix {
        dense_s(&self.ops, 1.5, &mul(y, y))
    }

    fn grad_h(&self, y: &ColumnVector) -> ColumnVector {
        y.clone()
    }

    fn energy(&self, y: &ColumnVector) -> f64 {
        0.5 * y.dot(y)
    }

    fn s_kind(&self) -> SKind {
        SKind::General
    }

    fn entries(&self) -> Option<&dyn EntryEvaluator> {
        Some(self)
    }

    fn gradient_is_identity(&self) -> bool {
        true
    }

    fn vector_field(&self, y: &ColumnVector) -> ColumnVector {
        stencil_field(&self.ops, 1.5, &mul(y, y), y)
    }

    fn vector_field_jacobian(&self, y: &ColumnVector) -> Option<DenseMatrix> {
        let w = mul(y, y);
        let dw: Vec<f64> = y.iter().map(|v| 2.0 * v).collect();
        let dwy: Vec<f64> = y.iter().map(|v| 3.0 * v * v).collect();
        Some(stencil_jacobian(&self.ops, 1.5, &w, &dw, &dwy, y))
    }
}

impl EntryEvaluator for MkdvSystem {
    fn dependencies(&self, i: usize, j: usize) -> Vec<usize> {
        entry_dependencies(&self.ops.d1, i, j)
    }

    fn entry(&self, i: usize, j: usize, state: &dyn Fn(usize) -> f64) -> f64 {
        let d1 = self.ops.d1[(i, j)];
        let lin = if d1 == 0.0 {
            0.0
        } else {
            let (yi, yj) = (state(i), state(j));
            1.5 * (yi * yi + yj * yj) * d1
        };
        -(lin + self.ops.d3[(i, j)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skewgrad::{check_skew, energy_of, energy_rate, rhs};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_state(rng: &mut StdRng, n: usize) -> ColumnVector {
        (0..n).map(|_| rng.random_range(-2.0..2.0)).collect()
    }

    fn ops(n: usize, length: f64) -> (GridConfig, DifferenceOperators) {
        let grid = GridConfig::new(length, n).unwrap();
        let ops = central_diff_ops(&grid, D2Scaling::Standard).unwrap();
        (grid, ops)
    }

    #[test]
    fn grid_spacing() {
        let g = GridConfig::new(20.0, 500).unwrap();
        assert_eq!(g.dx, 20.0 / 500.0);
        assert_eq!(g.offset, -10.0);
        assert_eq!(g.x(250), 0.0);
    }

    #[test]
    fn d1_first_row_n4() {
        let d1 = central_d1(4, 0.5).unwrap();
        assert_eq!(d1.row(0), vec![0.0, 1.0, 0.0, -1.0]);
        // periodic corners
        assert_eq!(d1[(3, 0)], 1.0);
        assert_eq!(d1[(0, 3)], -1.0);
    }

    #[test]
    fn too_few_points() {
        let g = GridConfig::new(1.0, 4).unwrap();
        assert!(matches!(
            central_diff_ops(&g, D2Scaling::Standard),
            Err(Error::StencilOverlap(4))
        ));
    }

    #[test]
    fn operator_structure() {
        for n in [5, 8, 33] {
            let (_, ops) = ops(n, 7.0);
            assert_eq!(ops.d1.transpose().scaled(-1.0), ops.d1);
            assert_eq!(ops.d3.max_asymmetry(), 0.0);
            for m in [&ops.d1, &ops.d2, &ops.d3] {
                for i in 0..n {
                    let s: f64 = m.row(i).iter().sum();
                    assert!(s.abs() <= 1e-11 * m.max_abs().max(1.0));
                }
            }
            let ones = vec![1.0; n];
            assert!(ops.d1.matvec(&ones).norm_inf() == 0.0);
        }
    }

    #[test]
    fn d3_is_product() {
        let (_, ops) = ops(8, 3.0);
        let mut expected = DenseMatrix::zeros(8, 8);
        for i in 0..8 {
            for j in 0..8 {
                expected[(i, j)] = (0..8).map(|k| ops.d1[(i, k)] * ops.d2[(k, j)]).sum();
            }
        }
        assert!(ops.d3.max_abs_diff(&expected) <= 1e-12 * expected.max_abs());
    }

    #[test]
    fn paper_literal_scaling() {
        let g = GridConfig::new(4.0, 8).unwrap();
        let lit = central_diff_ops(&g, D2Scaling::PaperLiteral).unwrap();
        assert_eq!(lit.d2[(0, 0)], -2.0 / (2.0 * 0.5));
        let std = central_diff_ops(&g, D2Scaling::Standard).unwrap();
        assert_eq!(std.d2[(0, 0)], -2.0 / 0.25);
    }

    #[test]
    fn stencil_matches_dense() {
        let (_, ops) = ops(11, 5.0);
        let x: Vec<f64> = (0..11).map(|i| (i as f64).sin()).collect();
        assert!(ops.d3_stencil.apply(&x).iter().zip(ops.d3.matvec(&x).iter()).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn kdv_zero_state() {
        let (g, o) = ops(16, 6.0);
        let sys = kdv_system(g, o.clone());
        assert_eq!(sys.s_matrix(&ColumnVector::zeros(16)), o.d3.scaled(-1.0));
    }

    #[test]
    fn kdv_skew_and_dense_oracle() {
        let mut rng = StdRng::seed_from_u64(21);
        let (g, o) = ops(16, 6.0);
        let sys = kdv_system(g, o.clone());
        for _ in 0..20 {
            let y = random_state(&mut rng, 16);
            assert!(check_skew(&sys, &y).unwrap() <= 1e-12);
        }
        let (g, o) = ops(8, 4.0);
        let sys = kdv_system(g, o.clone());
        let y = random_state(&mut rng, 8);
        let ymat = DenseMatrix::diag(&y);
        let mut s = ymat.matmul(&o.d1);
        s.add_scaled(1.0, &o.d1.matmul(&ymat));
        s.scale(2.0);
        s.add_scaled(1.0, &o.d3);
        s.scale(-1.0);
        let dense = s.matvec(&y);
        assert!(rhs(&sys, &y).unwrap().max_abs_diff(&dense) <= 1e-13 * dense.norm_inf().max(1.0));
    }

    #[test]
    fn kdv_constant_state_is_stationary() {
        let (g, o) = ops(16, 6.0);
        let sys = kdv_system(g, o);
        let f = rhs(&sys, &ColumnVector::from(vec![1.0; 16])).unwrap();
        assert!(f.norm_inf() <= 1e-11);
    }

    #[test]
    fn mkdv_properties() {
        let mut rng = StdRng::seed_from_u64(4);
        let (g, o) = ops(12, 5.0);
        let sys = mkdv_system(g, o.clone());
        assert_eq!(sys.s_matrix(&ColumnVector::zeros(12)), o.d3.scaled(-1.0));
        let y = random_state(&mut rng, 12);
        assert_eq!(sys.s_matrix(&y), sys.s_matrix(&y.scaled(-1.0)));
        assert!(check_skew(&sys, &y).unwrap() <= 1e-12);

        // entry evaluator against the dense matrix, reading only the declared stencil
        let dense = sys.s_matrix(&y);
        for i in 0..12 {
            for j in 0..12 {
                let deps = sys.dependencies(i, j);
                let e = sys.entry(i, j, &|k| {
                    assert!(deps.contains(&k));
                    y[k]
                });
                assert!((e - dense[(i, j)]).abs() <= 1e-14 * dense.max_abs().max(1.0));
            }
        }
        let alpha = ColumnVector::from(vec![0.7; 12]);
        assert!(rhs(&sys, &alpha).unwrap().norm_inf() <= 1e-10);
    }

    #[test]
    fn stencil_field_matches_dense_field() {
        let mut rng = StdRng::seed_from_u64(77);
        let (g, o) = ops(20, 8.0);
        let kdv = kdv_system(g, o.clone());
        let mkdv = mkdv_system(g, o);
        for sys in [&kdv as &dyn SkewGradientSystem, &mkdv] {
            let y = random_state(&mut rng, 20);
            let dense = sys.s_matrix(&y).matvec(&sys.grad_h(&y));
            let fast = sys.vector_field(&y);
            assert!(fast.max_abs_diff(&dense) <= 1e-12 * dense.norm_inf().max(1.0));
        }
    }

    #[test]
    fn analytic_jacobians_match_finite_differences() {
        let mut rng = StdRng::seed_from_u64(78);
        let (g, o) = ops(10, 8.0);
        let kdv = kdv_system(g, o.clone());
        let mkdv = mkdv_system(g, o);
        for sys in [&kdv as &dyn SkewGradientSystem, &mkdv] {
            let y = random_state(&mut rng, 10);
            let jac = sys.vector_field_jacobian(&y).unwrap();
            let h = 1e-6;
            for k in 0..10 {
                let mut yp = y.clone();
                let mut ym = y.clone();
                yp[k] += h;
                ym[k] -= h;
                let col = sys.vector_field(&yp).sub(&sys.vector_field(&ym)).scaled(0.5 / h);
                let scale = jac.max_abs();
                assert!(col.max_abs_diff(jac.column(k)) <= 1e-7 * scale);
            }
        }
    }

    #[test]
    fn energy_is_conserved_by_the_field() {
        let mut rng = StdRng::seed_from_u64(99);
        let (g, o) = ops(24, 10.0);
        let kdv = kdv_system(g, o.clone());
        let mkdv = mkdv_system(g, o);
        for sys in [&kdv as &dyn SkewGradientSystem, &mkdv] {
            for _ in 0..100 {
                let y = random_state(&mut rng, 24);
                assert!(energy_rate(sys, &y).unwrap() <= 1e-9);
            }
        }
    }

    #[test]
    fn initial_profiles() {
        let g = GridConfig::new(20.0, 500).unwrap();
        let kdv = initial_profile(ProblemKind::Kdv, &g);
        assert_eq!(kdv[250], 4.5);
        for k in 1..250 {
            let x = k as f64 * 0.04;
            let (right, left) = (profile_value(ProblemKind::Kdv, x), profile_value(ProblemKind::Kdv, -x));
            assert!((right - left).abs() <= 1e-15);
            // grid points mirror up to rounding in the coordinates
            assert!((kdv[250 + k] - kdv[250 - k]).abs() <= 1e-12);
        }
        let gm = GridConfig::new(10.0, 500).unwrap();
        assert_eq!(initial_profile(ProblemKind::Mkdv, &gm)[250], 2.0);

        let sys = kdv_system(g, central_diff_ops(&g, D2Scaling::Standard).unwrap());
        let direct: f64 = kdv.iter().map(|v| 0.5 * v * v).sum();
        assert!((energy_of(&sys, &kdv).unwrap() - direct).abs() <= 1e-12 * direct);
    }
}
