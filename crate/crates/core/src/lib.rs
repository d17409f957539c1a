//! Primal-dual splitting in Banach spaces.
//!
//! The crate provides finite-dimensional Banach space geometry (duality maps,
//! Bregman distances), Bregman resolvents of common functionals, linear and
//! nonlinear forward operators, a Chambolle-Pock type solver with Bregman
//! proximal steps, and an iteratively regularized Newton method built on it.

// `!(x > 0.0)` rejects NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fft;
pub mod irnm;
pub mod operators;
pub mod oracle;
pub mod resolvents;
pub mod solver;
pub mod spaces;

pub use error::{Error, Result};
pub use irnm::{irnm_run, tikhonov_solve, IrnmResult, IrnmSpec};
pub use operators::{DenseOperator, LinearOperator, NonlinearOperator};
pub use resolvents::{DataFn, PrimalFn};
pub use solver::{solve, SaddleProblem, Schedule, SolverOptions, Trace};
pub use spaces::{ConvexityConstants, Space, SpaceKind};
