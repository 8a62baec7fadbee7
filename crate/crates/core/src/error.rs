use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the reduction pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}: bad magic, not an SKM1 matrix file")]
    BadMagic(PathBuf),

    #[error("{path}: truncated matrix file (expected {expected} bytes, found {found})")]
    Truncated {
        path: PathBuf,
        expected: u64,
        found: u64,
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("malformed {what}: {detail}")]
    Parse { what: String, detail: String },

    #[error("SVD of a {rows}x{cols} matrix failed to converge")]
    SvdNoConvergence { rows: usize, cols: usize },

    #[error("singular matrix: zero pivot in column {0}")]
    Singular(usize),

    #[error("Newton iteration did not converge in {iterations} iterations (residual norm {residual:e})")]
    NewtonNoConvergence { iterations: usize, residual: f64 },

    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("requested rank {requested} exceeds numerical rank {rank}")]
    RankDeficient { requested: usize, rank: usize },

    #[error("{what} is not skew-symmetric (max |A + A^T| = {asymmetry:e})")]
    NotSkew { what: String, asymmetry: f64 },

    #[error("DEIM selection failed at basis vector {0}: interpolation matrix is singular")]
    DeimSelection(usize),

    #[error("n = {0} is too small for the difference stencil")]
    StencilOverlap(usize),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("dense intermediate of {needed} bytes exceeds the memory budget of {budget} bytes")]
    MemoryBudget { needed: usize, budget: usize },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    /// Wraps `self` with the name of the pipeline stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Innermost error, skipping stage and step annotations.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } | Error::AtStep { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for failures of the numerics (as opposed to bad input or I/O).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self.root(),
            Error::SvdNoConvergence { .. }
                | Error::Singular(_)
                | Error::NewtonNoConvergence { .. }
                | Error::RankDeficient { .. }
                | Error::NotSkew { .. }
                | Error::DeimSelection(_)
                | Error::NonFinite(_)
        )
    }

    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        if self.is_numerical() {
            2
        } else {
            1
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
