//! Structure-preserving model order reduction for skew-gradient systems
//! `dy/dt = S(y) ∇H(y)`.
//!
//! The crate covers the whole reduction workflow: full-order simulation with
//! the energy-preserving implicit midpoint rule, POD basis extraction,
//! reduced-order models that keep the skew-gradient structure (a generic
//! projection, a fast path for `S(y) = YD + DY + D_c`, and skew-DEIM for
//! general `S(y)`), and an experiment harness for the periodic KdV and
//! modified KdV benchmarks.

pub mod deim;
pub mod error;
pub mod experiment;
pub mod integrators;
pub mod la;
pub mod pod;
pub mod problems;
pub mod rom;
pub mod skewgrad;

pub use error::{Error, Result};
