//! Geometric and evaluative core for category-level articulated-object pose
//! estimation.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod formats;
pub mod geometry;
pub mod kinematics;
pub mod metrics;
pub mod oracle;
pub mod scenegen;
pub mod seed;
pub mod solver;

pub use error::{Error, Result};
