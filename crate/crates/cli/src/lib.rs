//! Batch driver for the `artipose` library: synthesize tabletop scenes,
//! solve every observed instance and evaluate the estimates. Each stage
//! reads and writes plain files under one output directory.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod layout;
pub mod run;

pub use config::{CameraConfig, MetricsConfig, RunConfig, SceneConfig};
pub use error::{CliError, CliResult};
pub use layout::Layout;
pub use run::{
    eval, pipeline, solve, synth, with_threads, Manifest, ModelSet, PipelineSummary, SolveSummary, SynthSummary,
};
