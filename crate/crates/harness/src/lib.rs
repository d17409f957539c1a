//! Experiment harness for the primal-dual solver: configuration, noise,
//! reference minimizers, experiment drivers and artifact output.

// `!(x > 0.0)` rejects NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod artifacts;
pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod noise;
pub mod reference;
pub mod selftest;

pub use error::{HarnessError, HarnessResult};
