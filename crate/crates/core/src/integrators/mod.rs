//! Time integration: the energy-preserving implicit midpoint rule (solved
//! with Newton), classical RK4 as a non-conservative baseline, trajectory
//! recording, and the quadratic-invariant condition on RK tableaux.

mod newton;
mod tableau;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use newton::{
    finite_difference_jacobian, newton_solve, newton_solve_with_jacobian, NewtonSolution,
};
pub use tableau::{
    satisfies_quadratic_invariant_condition, ButcherTableau, QuadraticInvariantCheck,
    QUADRATIC_INVARIANT_TOL,
};

use crate::error::{Error, Result};
use crate::la::{write_matrix, ColumnVector, DenseMatrix};
use crate::skewgrad::SkewGradientSystem;

/// Autonomous vector field `y' = f(y)`.
pub trait VectorField {
    fn dim(&self) -> usize;

    fn eval(&self, y: &ColumnVector) -> ColumnVector;

    fn jacobian(&self, _y: &ColumnVector) -> Option<DenseMatrix> {
        None
    }

    /// First integral recorded along trajectories, if the field has one.
    fn first_integral(&self, _y: &ColumnVector) -> Option<f64> {
        None
    }
}

impl<S: SkewGradientSystem + ?Sized> VectorField for S {
    fn dim(&self) -> usize {
        SkewGradientSystem::dim(self)
    }

    fn eval(&self, y: &ColumnVector) -> ColumnVector {
        self.vector_field(y)
    }

    fn jacobian(&self, y: &ColumnVector) -> Option<DenseMatrix> {
        self.vector_field_jacobian(y)
    }

    fn first_integral(&self, y: &ColumnVector) -> Option<f64> {
        Some(self.energy(y))
    }
}

/// Vector field from a closure.
pub struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&ColumnVector) -> ColumnVector> FnField<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&ColumnVector) -> ColumnVector> VectorField for FnField<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, y: &ColumnVector) -> ColumnVector {
        (self.f)(y)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JacobianMode {
    #[default]
    FiniteDifference,
    UserSupplied,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MidpointConfig {
    pub dt: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub jacobian: JacobianMode,
}

impl MidpointConfig {
    pub const DEFAULT_NEWTON_TOL: f64 = 1e-12;
    pub const DEFAULT_NEWTON_MAX_ITER: usize = 50;

    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            newton_tol: Self::DEFAULT_NEWTON_TOL,
            newton_max_iter: Self::DEFAULT_NEWTON_MAX_ITER,
            jacobian: JacobianMode::FiniteDifference,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt != 0.0) {
            return Err(Error::Config(format!("time step must be finite and nonzero, got {}", self.dt)));
        }
        if !(self.newton_tol > 0.0) {
            return Err(Error::Config(format!("newton_tol must be positive, got {}", self.newton_tol)));
        }
        if self.newton_max_iter == 0 {
            return Err(Error::Config("newton_max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// One implicit midpoint step: solves `y⁺ - y = Δt f((y⁺ + y)/2)` by
/// Newton's method starting from `y`.
pub fn midpoint_step<F: VectorField + ?Sized>(
    field: &F,
    y: &ColumnVector,
    cfg: &MidpointConfig,
) -> Result<ColumnVector> {
    cfg.validate()?;
    if y.dim() != field.dim() {
        return Err(Error::shape(format!(
            "state of dimension {} for a field of dimension {}",
            y.dim(),
            field.dim()
        )));
    }
    let dt = cfg.dt;
    let midpoint = |x: &ColumnVector| -> ColumnVector {
        x.iter().zip(y.iter()).map(|(a, b)| 0.5 * (a + b)).collect()
    };
    let residual = |x: &ColumnVector| -> ColumnVector {
        let f = field.eval(&midpoint(x));
        x.iter()
            .zip(y.iter())
            .zip(f.iter())
            .map(|((xn, yo), fv)| xn - yo - dt * fv)
            .collect()
    };
    let sol = match cfg.jacobian {
        JacobianMode::FiniteDifference => {
            newton_solve(&residual, y, cfg.newton_tol, cfg.newton_max_iter)?
        }
        JacobianMode::UserSupplied => {
            if field.jacobian(y).is_none() {
                return Err(Error::Config(
                    "user-supplied Jacobian requested but the field provides none".into(),
                ));
            }
            let jac = |x: &ColumnVector| -> DenseMatrix {
                let mut j = field
                    .jacobian(&midpoint(x))
                    .expect("field Jacobian availability checked above");
                j.scale(-0.5 * dt);
                for i in 0..j.rows() {
                    j[(i, i)] += 1.0;
                }
                j
            };
            newton_solve_with_jacobian(&residual, &jac, y, cfg.newton_tol, cfg.newton_max_iter)?
        }
    };
    Ok(sol.x)
}

/// One classical fourth-order Runge–Kutta step.
pub fn rk4_step<F: VectorField + ?Sized>(field: &F, y: &ColumnVector, dt: f64) -> ColumnVector {
    let k1 = field.eval(y);
    let k2 = field.eval(&y.add(&k1.scaled(0.5 * dt)));
    let k3 = field.eval(&y.add(&k2.scaled(0.5 * dt)));
    let k4 = field.eval(&y.add(&k3.scaled(dt)));
    let mut out = y.clone();
    out.axpy(dt / 6.0, &k1);
    out.axpy(dt / 3.0, &k2);
    out.axpy(dt / 3.0, &k3);
    out.axpy(dt / 6.0, &k4);
    out
}

/// Recorded states `y_0, y_k, y_2k, …` with their times and energies.
/// Energies are NaN when the field has no first integral.
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ColumnVector>,
    pub energies: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    fn push<F: VectorField + ?Sized>(&mut self, field: &F, t: f64, y: ColumnVector) {
        self.times.push(t);
        self.energies.push(field.first_integral(&y).unwrap_or(f64::NAN));
        self.states.push(y);
    }

    /// States as the columns of a matrix.
    pub fn state_matrix(&self) -> DenseMatrix {
        DenseMatrix::from_columns(&self.states)
    }

    /// Writes `<stem>.skm` (states as columns) and `<stem>.csv` (`t,H`).
    pub fn export(&self, dir: &Path, stem: &str) -> Result<()> {
        write_matrix(dir.join(format!("{stem}.skm")), &self.state_matrix())?;
        let path = dir.join(format!("{stem}.csv"));
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(file);
        let mut write = || -> std::io::Result<()> {
            writeln!(w, "t,H")?;
            for (t, h) in self.times.iter().zip(&self.energies) {
                writeln!(w, "{t},{h}")?;
            }
            w.flush()
        };
        write().map_err(|e| Error::io(&path, e))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Scheme {
    Midpoint(MidpointConfig),
    Rk4 { dt: f64 },
}

impl Scheme {
    pub fn dt(&self) -> f64 {
        match self {
            Scheme::Midpoint(cfg) => cfg.dt,
            Scheme::Rk4 { dt } => *dt,
        }
    }
}

/// Integrates `steps` steps from `y0`, recording every `record_every`-th
/// state (plus `y0`). Step errors carry the failing step index.
pub fn integrate<F: VectorField + ?Sized>(
    field: &F,
    y0: &ColumnVector,
    scheme: &Scheme,
    steps: usize,
    record_every: usize,
) -> Result<Trajectory> {
    if steps == 0 || record_every == 0 {
        return Err(Error::Config(format!(
            "steps ({steps}) and record_every ({record_every}) must be positive"
        )));
    }
    if let Scheme::Midpoint(cfg) = scheme {
        cfg.validate()?;
    }
    let dt = scheme.dt();
    let mut traj = Trajectory::default();
    traj.push(field, 0.0, y0.clone());
    let mut y = y0.clone();
    for k in 1..=steps {
        y = match scheme {
            Scheme::Midpoint(cfg) => midpoint_step(field, &y, cfg).map_err(|e| Error::AtStep {
                step: k,
                source: Box::new(e),
            })?,
            Scheme::Rk4 { dt } => rk4_step(field, &y, *dt),
        };
        if !y.is_finite() {
            return Err(Error::AtStep {
                step: k,
                source: Box::new(Error::NonFinite("state".into())),
            });
        }
        if k % record_every == 0 {
            traj.push(field, k as f64 * dt, y.clone());
        }
    }
    Ok(traj)
}
