//! Full-order skew-gradient systems `dy/dt = S(y) ∇H(y)` with `S(y)`
//! skew-symmetric, so that `H` is a first integral.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::la::{ColumnVector, DenseMatrix};

/// Structural class of `S(y)`; decides which reduced-order path applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SKind {
    Constant,
    AffineInY,
    General,
}

/// Per-entry access to `S(y)`, used by the online stage of skew-DEIM.
///
/// `entry` must read the state only through `state`, and only at the
/// indices reported by `dependencies(i, j)`.
pub trait EntryEvaluator: Send + Sync {
    /// State indices that entry `(i, j)` reads.
    fn dependencies(&self, i: usize, j: usize) -> Vec<usize>;

    fn entry(&self, i: usize, j: usize, state: &dyn Fn(usize) -> f64) -> f64;
}

/// Decomposition `S(y) = Y D + D Y + D_c` with `Y = diag(y)` and constant
/// skew-symmetric `D`, `D_c`.
#[derive(Clone, Debug)]
pub struct AffineSkew {
    pub d: DenseMatrix,
    pub d_const: Option<DenseMatrix>,
}

pub trait SkewGradientSystem: Send + Sync {
    fn dim(&self) -> usize;

    fn s_matrix(&self, y: &ColumnVector) -> DenseMatrix;

    fn grad_h(&self, y: &ColumnVector) -> ColumnVector;

    fn energy(&self, y: &ColumnVector) -> f64;

    fn s_kind(&self) -> SKind;

    fn entries(&self) -> Option<&dyn EntryEvaluator> {
        None
    }

    fn affine_skew(&self) -> Option<&AffineSkew> {
        None
    }

    /// True when `∇H(y) = y`.
    fn gradient_is_identity(&self) -> bool {
        false
    }

    /// `S(y) ∇H(y)`. Implementations may override with a cheaper route.
    fn vector_field(&self, y: &ColumnVector) -> ColumnVector {
        self.s_matrix(y).matvec(&self.grad_h(y))
    }

    /// Jacobian of [`vector_field`](Self::vector_field), when available in
    /// closed form.
    fn vector_field_jacobian(&self, _y: &ColumnVector) -> Option<DenseMatrix> {
        None
    }
}

fn check_dim(sys: &dyn SkewGradientSystem, y: &ColumnVector) -> Result<()> {
    if y.dim() != sys.dim() {
        return Err(Error::shape(format!(
            "state of dimension {} for a system of dimension {}",
            y.dim(),
            sys.dim()
        )));
    }
    Ok(())
}

/// Right-hand side `S(y) ∇H(y)`.
pub fn rhs(sys: &dyn SkewGradientSystem, y: &ColumnVector) -> Result<ColumnVector> {
    check_dim(sys, y)?;
    Ok(sys.vector_field(y))
}

pub fn energy_of(sys: &dyn SkewGradientSystem, y: &ColumnVector) -> Result<f64> {
    check_dim(sys, y)?;
    Ok(sys.energy(y))
}

/// max_ij |S(y)_ij + S(y)_ji|.
pub fn check_skew(sys: &dyn SkewGradientSystem, y: &ColumnVector) -> Result<f64> {
    check_dim(sys, y)?;
    Ok(sys.s_matrix(y).max_asymmetry())
}

/// |∇H(y)ᵀ rhs(y)| divided by `1 + |∇H(y)| |rhs(y)|`; zero for an exact
/// skew-gradient field.
pub fn energy_rate(sys: &dyn SkewGradientSystem, y: &ColumnVector) -> Result<f64> {
    let f = rhs(sys, y)?;
    let g = sys.grad_h(y);
    Ok(g.dot(&f).abs() / (1.0 + g.norm() * f.norm()))
}

type MatrixFn = Arc<dyn Fn(&ColumnVector) -> DenseMatrix + Send + Sync>;
type VectorFn = Arc<dyn Fn(&ColumnVector) -> ColumnVector + Send + Sync>;
type ScalarFn = Arc<dyn Fn(&ColumnVector) -> f64 + Send + Sync>;

/// Skew-gradient system assembled from closures.
#[derive(Clone)]
pub struct FnSystem {
    n: usize,
    s: MatrixFn,
    grad: VectorFn,
    energy: ScalarFn,
    kind: SKind,
    identity_gradient: bool,
}

impl FnSystem {
    pub fn new(
        n: usize,
        kind: SKind,
        s: impl Fn(&ColumnVector) -> DenseMatrix + Send + Sync + 'static,
        grad: impl Fn(&ColumnVector) -> ColumnVector + Send + Sync + 'static,
        energy: impl Fn(&ColumnVector) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            n,
            s: Arc::new(s),
            grad: Arc::new(grad),
            energy: Arc::new(energy),
            kind,
            identity_gradient: false,
        }
    }

    /// System with `H(y) = ½ yᵀy`.
    pub fn quadratic(
        n: usize,
        kind: SKind,
        s: impl Fn(&ColumnVector) -> DenseMatrix + Send + Sync + 'static,
    ) -> Self {
        let mut sys = Self::new(n, kind, s, |y| y.clone(), |y| 0.5 * y.dot(y));
        sys.identity_gradient = true;
        sys
    }

    /// Constant `S` with `H(y) = ½ yᵀy`.
    pub fn constant_quadratic(s: DenseMatrix) -> Self {
        let n = s.rows();
        Self::quadratic(n, SKind::Constant, move |_| s.clone())
    }
}

impl SkewGradientSystem for FnSystem {
    fn dim(&self) -> usize {
        self.n
    }

    fn s_matrix(&self, y: &ColumnVector) -> DenseMatrix {
        (self.s)(y)
    }

    fn grad_h(&self, y: &ColumnVector) -> ColumnVector {
        (self.grad)(y)
    }

    fn energy(&self, y: &ColumnVector) -> f64 {
        (self.energy)(y)
    }

    fn s_kind(&self) -> SKind {
        self.kind
    }

    fn gradient_is_identity(&self) -> bool {
        self.identity_gradient
    }
}
