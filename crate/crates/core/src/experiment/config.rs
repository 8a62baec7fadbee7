use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrators::{JacobianMode, MidpointConfig};
use crate::pod::Truncation;
use crate::problems::{D2Scaling, GridConfig, ProblemKind};
use crate::rom::RomVariant;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RomIntegrator {
    #[default]
    Midpoint,
    Rk4,
}

/// Experiment description. Missing keys take the KdV soliton defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    #[serde(rename = "L", alias = "length")]
    pub length: f64,
    pub n: usize,
    #[serde(rename = "T", alias = "final_time")]
    pub final_time: f64,
    pub steps: usize,
    pub d2_scaling: D2Scaling,
    /// Left end of the grid; `-L/2` when absent.
    pub offset: Option<f64>,
    pub r: Option<usize>,
    pub epsilon: Option<f64>,
    pub variant: RomVariant,
    pub deim_m: Option<usize>,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub jacobian: JacobianMode,
    pub rom_integrator: RomIntegrator,
    pub out_dir: PathBuf,
    pub record_every: usize,
    pub augment: bool,
    pub mu: f64,
    /// Also run the plain Galerkin ROM for comparison.
    pub baseline: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: ProblemKind::Kdv,
            length: 20.0,
            n: 500,
            final_time: 3.0,
            steps: 600,
            d2_scaling: D2Scaling::Standard,
            offset: None,
            r: None,
            epsilon: None,
            variant: RomVariant::LinearSFast,
            deim_m: None,
            newton_tol: MidpointConfig::DEFAULT_NEWTON_TOL,
            newton_max_iter: MidpointConfig::DEFAULT_NEWTON_MAX_ITER,
            jacobian: JacobianMode::FiniteDifference,
            rom_integrator: RomIntegrator::Midpoint,
            out_dir: PathBuf::from("out"),
            record_every: 1,
            augment: false,
            mu: 1.0,
            baseline: false,
        }
    }
}

pub const DEFAULT_RANK: usize = 20;

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.length > 0.0 && self.length.is_finite()) {
            return bad(format!("L must be positive, got {}", self.length));
        }
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            return bad(format!("T must be positive, got {}", self.final_time));
        }
        if self.n < 5 {
            return bad(format!("n must be at least 5, got {}", self.n));
        }
        if self.steps == 0 || self.record_every == 0 {
            return bad("steps and record_every must be positive".into());
        }
        if !(self.newton_tol > 0.0) || self.newton_max_iter == 0 {
            return bad("newton_tol and newton_max_iter must be positive".into());
        }
        if self.offset.is_some_and(|o| !o.is_finite()) {
            return bad("offset must be finite".into());
        }
        if self.augment && !(self.mu > 0.0 && self.mu.is_finite()) {
            return bad(format!("mu must be positive, got {}", self.mu));
        }
        self.truncation()?;
        if self.r == Some(0) || self.deim_m == Some(0) {
            return bad("r and deim_m must be positive".into());
        }
        if self.variant == RomVariant::LinearSFast && self.problem != ProblemKind::Kdv {
            return bad(format!(
                "variant linear_s_fast needs S(y) affine in y, which {} is not",
                self.problem.name()
            ));
        }
        Ok(())
    }

    pub fn truncation(&self) -> Result<Truncation> {
        match (self.r, self.epsilon) {
            (Some(_), Some(_)) => Err(Error::Config("set either r or epsilon, not both".into())),
            (Some(r), None) => Ok(Truncation::FixedRank(r)),
            (None, Some(eps)) if eps > 0.0 && eps < 1.0 => Ok(Truncation::Energy(eps)),
            (None, Some(eps)) => Err(Error::Config(format!("epsilon must lie in (0, 1), got {eps}"))),
            (None, None) => Ok(Truncation::FixedRank(DEFAULT_RANK)),
        }
    }

    pub fn dt(&self) -> f64 {
        self.final_time / self.steps as f64
    }

    pub fn grid(&self) -> Result<GridConfig> {
        match self.offset {
            Some(o) => GridConfig::with_offset(self.length, self.n, o),
            None => GridConfig::new(self.length, self.n),
        }
    }

    pub fn midpoint(&self) -> MidpointConfig {
        MidpointConfig {
            dt: self.dt(),
            newton_tol: self.newton_tol,
            newton_max_iter: self.newton_max_iter,
            jacobian: self.jacobian,
        }
    }

    /// Number of recorded states including the initial one.
    pub fn recorded_len(&self) -> usize {
        self.steps / self.record_every + 1
    }
}
