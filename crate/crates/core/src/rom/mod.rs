//! Reduced-order skew-gradient systems.

mod linear;

pub use linear::{build_dtilde, linear_s_eval, linear_s_offline, DtildeMatrix, DEFAULT_MEMORY_BUDGET};

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::deim::{gather_entries, skew_deim_eval, CompressedSnapshots, SkewDeimOperator};
use crate::error::{Error, Result};
use crate::la::{read_matrix, unvec, write_matrix, ColumnVector, DenseMatrix};
use crate::pod::PodBasis;
use crate::skewgrad::{SKind, SkewGradientSystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RomVariant {
    /// Plain Galerkin projection `Vᵀ S(Vz) ∇H(Vz)`; not structure preserving.
    GalerkinGeneric,
    /// `[Vᵀ S(Vz) V] [Vᵀ ∇H(Vz)]` with dense full-order `S`.
    SkewGeneric,
    /// Precomputed tensors for `S(y) = YD + DY + D_c`.
    LinearSFast,
    /// Skew-DEIM approximation of `Vᵀ S(Vz) V`.
    SkewDeim,
}

impl RomVariant {
    pub fn name(self) -> &'static str {
        match self {
            RomVariant::GalerkinGeneric => "galerkin_generic",
            RomVariant::SkewGeneric => "skew_generic",
            RomVariant::LinearSFast => "linear_s_fast",
            RomVariant::SkewDeim => "skew_deim",
        }
    }

    pub fn preserves_structure(self) -> bool {
        self != RomVariant::GalerkinGeneric
    }
}

#[derive(Clone, Debug)]
pub struct ReduceOptions {
    /// Skew-DEIM size; defaults to the basis size.
    pub deim_m: Option<usize>,
    pub s_snapshots: Option<CompressedSnapshots>,
    pub memory_budget: usize,
}

impl Default for ReduceOptions {
    fn default() -> Self {
        Self {
            deim_m: None,
            s_snapshots: None,
            memory_budget: DEFAULT_MEMORY_BUDGET,
        }
    }
}

#[derive(Clone)]
pub struct ReducedSystem {
    pub variant: RomVariant,
    pub basis: PodBasis,
    pub m_lin: Option<DenseMatrix>,
    pub s_const_r: Option<DenseMatrix>,
    pub deim_op: Option<SkewDeimOperator>,
    full: Arc<dyn SkewGradientSystem>,
}

impl std::fmt::Debug for ReducedSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ReducedSystem")
            .field("variant", &self.variant)
            .field("n", &self.basis.n())
            .field("r", &self.basis.r())
            .field("m", &self.deim_op.as_ref().map(|op| op.m()))
            .finish()
    }
}

/// Builds the `r`-dimensional system for `variant`.
pub fn reduce(
    sys: Arc<dyn SkewGradientSystem>,
    basis: PodBasis,
    variant: RomVariant,
    opts: ReduceOptions,
) -> Result<ReducedSystem> {
    if basis.n() != sys.dim() {
        return Err(Error::shape(format!(
            "basis has {} rows for a system of dimension {}",
            basis.n(),
            sys.dim()
        )));
    }
    let mut rs = ReducedSystem {
        variant,
        basis,
        m_lin: None,
        s_const_r: None,
        deim_op: None,
        full: sys,
    };
    match variant {
        RomVariant::GalerkinGeneric | RomVariant::SkewGeneric => {}
        RomVariant::LinearSFast => {
            let aff = match (rs.full.s_kind(), rs.full.affine_skew()) {
                (SKind::AffineInY | SKind::Constant, Some(aff)) => aff,
                _ => {
                    return Err(Error::Config(
                        "linear_s_fast needs a system with S(y) = YD + DY + D_c".into(),
                    ))
                }
            };
            let (m_lin, s_c) = linear_s_offline(&rs.basis.v, &aff.d, aff.d_const.as_ref(), opts.memory_budget)?;
            rs.m_lin = Some(m_lin);
            rs.s_const_r = Some(s_c);
        }
        RomVariant::SkewDeim => {
            let Some(ev) = rs.full.entries() else {
                return Err(Error::Config("skew_deim needs a per-entry evaluator for S".into()));
            };
            let Some(snaps) = opts.s_snapshots.as_ref() else {
                return Err(Error::Config("skew_deim needs S-snapshots".into()));
            };
            let m = opts.deim_m.unwrap_or(rs.basis.r());
            rs.deim_op = Some(SkewDeimOperator::build(snaps, m, &rs.basis.v, ev)?);
        }
    }
    Ok(rs)
}

impl ReducedSystem {
    pub fn r(&self) -> usize {
        self.basis.r()
    }

    pub fn full_system(&self) -> &Arc<dyn SkewGradientSystem> {
        &self.full
    }

    /// `z₀ = Vᵀ y₀`.
    pub fn initial_condition(&self, y0: &[f64]) -> Result<ColumnVector> {
        if y0.len() != self.basis.n() {
            return Err(Error::shape(format!("initial state of length {}", y0.len())));
        }
        Ok(self.basis.v.tr_matvec(y0))
    }

    pub fn lift(&self, z: &[f64]) -> ColumnVector {
        self.basis.v.matvec(z)
    }

    /// `S_r(z)` for the structure-preserving variants; for the Galerkin
    /// baseline this is the dense projection `Vᵀ S(Vz) V`.
    pub fn reduced_s(&self, z: &ColumnVector) -> Result<DenseMatrix> {
        if z.dim() != self.r() {
            return Err(Error::shape(format!("reduced state of length {}, expected {}", z.dim(), self.r())));
        }
        match self.variant {
            RomVariant::GalerkinGeneric | RomVariant::SkewGeneric => {
                let v = &self.basis.v;
                let s = self.full.s_matrix(&v.matvec(z));
                Ok(v.tr_matmul(&s.matmul(v)).skew_part())
            }
            RomVariant::LinearSFast => linear_s_eval(
                self.m_lin.as_ref().expect("fast path tensors"),
                self.s_const_r.as_ref().expect("fast path tensors"),
                z,
            ),
            RomVariant::SkewDeim => {
                let op = self.deim_op.as_ref().expect("DEIM operator");
                let ev = self.full.entries().expect("entry evaluator");
                skew_deim_eval(op, &gather_entries(op, ev, z)?)
            }
        }
    }

    /// `Vᵀ ∇H(Vz)`; exactly `z` when `∇H` is the identity.
    pub fn reduced_grad(&self, z: &ColumnVector) -> ColumnVector {
        if self.full.gradient_is_identity() {
            z.clone()
        } else {
            self.basis.v.tr_matvec(&self.full.grad_h(&self.lift(z)))
        }
    }

    /// Semi-analytic Jacobian for skew-DEIM: `S_r(z) + Σ_l (W_l z) ∂s_l/∂z`
    /// with the entry derivatives by central differences.
    fn deim_jacobian(&self, z: &ColumnVector) -> Option<DenseMatrix> {
        let op = self.deim_op.as_ref()?;
        let ev = self.full.entries()?;
        let r = self.r();
        let m = op.m();
        let s = gather_entries(op, ev, z).ok()?;
        let mut jac = skew_deim_eval(op, &s).ok()?;
        let mut ds = DenseMatrix::zeros(m, r);
        let mut zp = z.clone();
        for k in 0..r {
            let h = f64::EPSILON.sqrt() * (1.0 + z[k].abs());
            zp[k] = z[k] + h;
            let sp = gather_entries(op, ev, &zp).ok()?;
            zp[k] = z[k] - h;
            let sm = gather_entries(op, ev, &zp).ok()?;
            zp[k] = z[k];
            for l in 0..m {
                ds[(l, k)] = (sp[l] - sm[l]) / (2.0 * h);
            }
        }
        for l in 0..m {
            let wl = unvec(op.online_tensor_w.column(l), r, r).ok()?;
            let a = wl.matvec(z);
            for k in 0..r {
                let d = ds[(l, k)];
                if d != 0.0 {
                    jac.column_mut(k).iter_mut().zip(a.iter()).for_each(|(j, ai)| *j += ai * d);
                }
            }
        }
        Some(jac)
    }

    pub fn write(&self, dir: &Path, extra: BTreeMap<String, serde_json::Value>) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_matrix(dir.join("v.skm"), &self.basis.v)?;
        if let (Some(m_lin), Some(s_c)) = (&self.m_lin, &self.s_const_r) {
            write_matrix(dir.join("mlin.skm"), m_lin)?;
            write_matrix(dir.join("sconst.skm"), s_c)?;
        }
        if let Some(op) = &self.deim_op {
            op.write(dir)?;
        }
        let manifest = RomManifest {
            variant: self.variant,
            n: self.basis.n(),
            r: self.r(),
            m: self.deim_op.as_ref().map(|op| op.m()),
            extra,
        };
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
    }

    /// Loads a system written by [`ReducedSystem::write`] on top of `sys`.
    pub fn read(dir: &Path, sys: Arc<dyn SkewGradientSystem>) -> Result<(Self, RomManifest)> {
        let manifest = RomManifest::read(dir)?;
        let v = read_matrix(dir.join("v.skm"))?;
        if v.shape() != (manifest.n, manifest.r) || v.rows() != sys.dim() {
            return Err(Error::shape(format!(
                "stored basis {:?} does not match manifest ({}, {}) or system dimension {}",
                v.shape(),
                manifest.n,
                manifest.r,
                sys.dim()
            )));
        }
        let basis = PodBasis::from_orthonormal(v)?;
        let mut rs = ReducedSystem {
            variant: manifest.variant,
            basis,
            m_lin: None,
            s_const_r: None,
            deim_op: None,
            full: sys,
        };
        let r = manifest.r;
        match manifest.variant {
            RomVariant::LinearSFast => {
                let m_lin = read_matrix(dir.join("mlin.skm"))?;
                let s_c = read_matrix(dir.join("sconst.skm"))?;
                if m_lin.shape() != (r * r, r) || s_c.shape() != (r, r) {
                    return Err(Error::shape("stored fast-path tensors do not match r"));
                }
                rs.m_lin = Some(m_lin);
                rs.s_const_r = Some(s_c);
            }
            RomVariant::SkewDeim => {
                let ev = rs
                    .full
                    .entries()
                    .ok_or_else(|| Error::Config("skew_deim needs a per-entry evaluator for S".into()))?;
                rs.deim_op = Some(SkewDeimOperator::read(dir, &rs.basis.v, ev)?);
            }
            RomVariant::GalerkinGeneric | RomVariant::SkewGeneric => {}
        }
        Ok((rs, manifest))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RomManifest {
    pub variant: RomVariant,
    pub n: usize,
    pub r: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

impl RomManifest {
    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join("manifest.json");
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            what: path.display().to_string(),
            detail: e.to_string(),
        })
    }
}

/// `H(Vz)`.
pub fn reduced_energy(rs: &ReducedSystem, z: &[f64]) -> f64 {
    rs.full.energy(&rs.lift(z))
}

impl SkewGradientSystem for ReducedSystem {
    fn dim(&self) -> usize {
        self.r()
    }

    fn s_matrix(&self, z: &ColumnVector) -> DenseMatrix {
        self.reduced_s(z).expect("reduced S evaluation")
    }

    fn grad_h(&self, z: &ColumnVector) -> ColumnVector {
        self.reduced_grad(z)
    }

    fn energy(&self, z: &ColumnVector) -> f64 {
        reduced_energy(self, z)
    }

    fn s_kind(&self) -> SKind {
        match self.variant {
            RomVariant::LinearSFast => SKind::AffineInY,
            _ => self.full.s_kind(),
        }
    }

    fn gradient_is_identity(&self) -> bool {
        self.full.gradient_is_identity()
    }

    fn vector_field(&self, z: &ColumnVector) -> ColumnVector {
        match self.variant {
            RomVariant::GalerkinGeneric => self.basis.v.tr_matvec(&self.full.vector_field(&self.lift(z))),
            _ => self.s_matrix(z).matvec(&self.reduced_grad(z)),
        }
    }

    fn vector_field_jacobian(&self, z: &ColumnVector) -> Option<DenseMatrix> {
        if !self.full.gradient_is_identity() {
            return None;
        }
        match self.variant {
            RomVariant::LinearSFast => {
                // d/dz [S_r(z) z] = S_r(z) + [M_k z]_k
                let m_lin = self.m_lin.as_ref()?;
                let r = self.r();
                let mut jac = self.reduced_s(z).ok()?;
                for k in 0..r {
                    let mk = unvec(m_lin.column(k), r, r).ok()?;
                    let col = mk.matvec(z);
                    jac.column_mut(k).iter_mut().zip(col.iter()).for_each(|(j, c)| *j += c);
                }
                Some(jac)
            }
            RomVariant::SkewDeim => self.deim_jacobian(z),
            RomVariant::GalerkinGeneric => {
                let v = &self.basis.v;
                let jf = self.full.vector_field_jacobian(&self.lift(z))?;
                Some(v.tr_matmul(&jf.matmul(v)))
            }
            RomVariant::SkewGeneric => None,
        }
    }
}
