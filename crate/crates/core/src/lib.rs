//! Tetration and the tower of real hyper-operations `e ↑^k t`, built from
//! infinite compositions and correction-term limits.
//!
//! The layers, bottom up:
//!
//! * [`jet`]: truncated Taylor arithmetic, so every evaluation can carry
//!   derivatives.
//! * [`guarded`]: level-index reals for values beyond `f64`.
//! * [`comp`]: nested compositions with tail bounds.
//! * [`phi`]: the entire auxiliary function `phi`.
//! * [`tower`]: tetration, its inverse, and the levels `k >= 2`.
//! * [`verify`]: the invariant checks and diagnostic probes.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // negated comparisons double as NaN rejection

pub mod comp;
pub mod error;
pub mod guarded;
pub mod jet;
pub mod phi;
pub mod root;
pub mod scalar;
pub mod tower;
pub mod verify;

pub use error::{Error, Result};
pub use guarded::GuardedReal;
pub use jet::Jet;
pub use scalar::{Numeric, Scalar};
pub use tower::{HyperOpLevel, Level, Tetration, Tower, TowerConfig};
