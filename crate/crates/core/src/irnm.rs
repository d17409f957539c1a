//! Tikhonov solves and the iteratively regularized Newton method.
//!
//! Each Newton step linearizes the forward map at the current iterate and
//! solves the Tikhonov problem for the linearized data model
//! `y ~ T(x_n) + T'[x_n](x - x_n)` directly in `x`, so the affine part
//! `T(x_n) - T'[x_n] x_n` is folded into the data fidelity.

use std::sync::Arc;

use ndarray::{Array1, ArrayView1, Zip};

use crate::error::{check_dim, invalid, Error, Result};
use crate::operators::{power_method, LinearOperator, NonlinearOperator, PowerMethodOptions};
use crate::resolvents::{DataFn, PrimalFn};
use crate::solver::{solve, SaddleProblem, Schedule, SolverOptions, Trace, DEFAULT_RELAXATION};
use crate::spaces::Space;

/// Dual starting point `p0` with `T x0 in d g*(p0)`, or zero where no such
/// point exists.
pub fn initial_dual(g: &DataFn, y_space: &Space, tx0: ArrayView1<f64>) -> Result<Array1<f64>> {
    check_dim(y_space.dim(), tx0.len())?;
    match g {
        DataFn::QuadraticShift { y0 } => {
            let r = &tx0 - y0;
            y_space.j(r.view())
        }
        DataFn::KlPoisson { y_obs, shift } => Ok(Zip::from(&tx0)
            .and(y_obs)
            .and(shift)
            .map_collect(|&t, &obs, &b| {
                let z = t + b;
                if z > 0.0 {
                    1.0 - obs / z
                } else {
                    0.0
                }
            })),
        DataFn::Zero | DataFn::ZeroConjugate => Ok(Array1::zeros(tx0.len())),
    }
}

/// Minimize `g(T x) + f(x)` from `x0` (zero by default) with the dual start
/// given by [`initial_dual`].
pub fn tikhonov_solve(
    op: Arc<dyn LinearOperator>,
    x_space: Space,
    y_space: Space,
    fidelity: DataFn,
    penalty: PrimalFn,
    x0: Option<Array1<f64>>,
    options: &SolverOptions,
) -> Result<(Array1<f64>, Trace)> {
    let x0 = x0.unwrap_or_else(|| Array1::zeros(x_space.dim()));
    let problem = SaddleProblem::new(op, penalty, fidelity, x_space, y_space)?;
    let tx0 = problem.op.apply(x0.view())?;
    let p0 = initial_dual(&problem.g, &problem.y_space, tx0.view())?;
    let trace = solve(&problem, x0, p0, options)?;
    Ok((trace.state.x.clone(), trace))
}

/// Penalty `R` scaled by the regularization parameter in each step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Penalty {
    /// `||x||_X^2 / 2`.
    HalfSquare,
    /// `||x||_X^r / r`.
    PowerNorm(f64),
    /// `||x||_1`.
    L1,
}

impl Penalty {
    pub fn scaled(&self, alpha: f64) -> Result<PrimalFn> {
        match *self {
            Self::HalfSquare => PrimalFn::half_square(alpha),
            Self::PowerNorm(r) => PrimalFn::power_norm(r, alpha),
            Self::L1 => PrimalFn::l1(alpha),
        }
    }
}

/// Data model used inside the Newton steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseModel {
    Poisson,
    Gaussian,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IrnmSpec {
    pub alpha0: f64,
    /// Geometric decay `alpha_{n+1} = rho alpha_n`.
    pub rho: f64,
    pub newton_steps: usize,
    /// Offset in the data weights `W = 1 / (T(x_n) + offset)`.
    pub weight_offset: f64,
    pub penalty: Penalty,
    pub noise: NoiseModel,
    /// Dual step of the inner runs; balanced steps when absent.
    pub sigma: Option<f64>,
    pub relaxation: f64,
    pub inner_iters: usize,
    pub inner_stagnation_tol: f64,
    pub power: PowerMethodOptions,
}

impl Default for IrnmSpec {
    fn default() -> Self {
        Self {
            alpha0: 1.0,
            rho: 0.5,
            newton_steps: 2,
            weight_offset: 0.1,
            penalty: Penalty::HalfSquare,
            noise: NoiseModel::Poisson,
            sigma: None,
            relaxation: DEFAULT_RELAXATION,
            inner_iters: 200,
            inner_stagnation_tol: 1e-12,
            power: PowerMethodOptions::default(),
        }
    }
}

impl IrnmSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha0.is_finite() && self.alpha0 > 0.0) {
            return Err(invalid(format!(
                "alpha0 must be positive, got {}",
                self.alpha0
            )));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(invalid(format!("rho must lie in (0, 1), got {}", self.rho)));
        }
        if self.newton_steps == 0 {
            return Err(invalid("at least one Newton step is required"));
        }
        if !(self.weight_offset >= 0.0 && self.weight_offset.is_finite()) {
            return Err(invalid("weight offset must be nonnegative"));
        }
        if let Some(s) = self.sigma {
            if !(s > 0.0) {
                return Err(invalid("sigma must be positive"));
            }
        }
        if self.inner_iters == 0 {
            return Err(invalid("inner iteration budget must be positive"));
        }
        Ok(())
    }
}

/// Poisson misfit `sum_j y_j - y_obs_j - y_obs_j ln(y_j / y_obs_j)` with `0 ln 0 = 0`.
pub fn kl_misfit(y: ArrayView1<f64>, y_obs: ArrayView1<f64>) -> Result<f64> {
    check_dim(y_obs.len(), y.len())?;
    let mut acc = 0.0;
    for (&y, &obs) in y.iter().zip(y_obs.iter()) {
        if obs > 0.0 {
            if y <= 0.0 {
                return Ok(f64::INFINITY);
            }
            acc += y - obs - obs * (y / obs).ln();
        } else {
            if y < 0.0 {
                return Ok(f64::INFINITY);
            }
            acc += y;
        }
    }
    Ok(acc)
}

fn data_misfit(noise: NoiseModel, y: ArrayView1<f64>, y_obs: ArrayView1<f64>) -> Result<f64> {
    match noise {
        NoiseModel::Poisson => kl_misfit(y, y_obs),
        NoiseModel::Gaussian => {
            check_dim(y_obs.len(), y.len())?;
            Ok(0.5
                * Zip::from(&y)
                    .and(&y_obs)
                    .fold(0.0, |acc, &a, &b| acc + (a - b) * (a - b)))
        }
    }
}

#[derive(Clone, Debug)]
pub struct NewtonStep {
    pub n: usize,
    pub alpha: f64,
    pub op_norm: f64,
    /// Data misfit at the iterate produced by this step.
    pub misfit: f64,
    pub trace: Trace,
}

#[derive(Clone, Debug)]
pub struct IrnmResult {
    pub x: Array1<f64>,
    /// Data misfit at the starting point.
    pub initial_misfit: f64,
    pub steps: Vec<NewtonStep>,
    /// Set when an inner run diverged and the outer loop stopped early.
    pub aborted: Option<String>,
}

impl IrnmResult {
    pub fn misfits(&self) -> Vec<f64> {
        std::iter::once(self.initial_misfit)
            .chain(self.steps.iter().map(|s| s.misfit))
            .collect()
    }
}

/// Run the Newton iteration from `x0` against observations `y_obs`.
pub fn irnm_run(
    op: &dyn NonlinearOperator,
    x_space: &Space,
    y_obs: ArrayView1<f64>,
    x0: Array1<f64>,
    spec: &IrnmSpec,
) -> Result<IrnmResult> {
    spec.validate()?;
    check_dim(op.domain_dim(), x_space.dim())?;
    check_dim(op.domain_dim(), x0.len())?;
    check_dim(op.range_dim(), y_obs.len())?;
    let mut x = x0;
    let mut y_model = op.apply(x.view())?;
    let initial_misfit = data_misfit(spec.noise, y_model.view(), y_obs)?;
    let mut alpha = spec.alpha0;
    let mut steps = Vec::with_capacity(spec.newton_steps);
    let mut aborted = None;
    for n in 0..spec.newton_steps {
        let shifted = y_model.mapv(|v| v + spec.weight_offset);
        if let Some(v) = shifted.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(invalid(format!(
                "data weights need positive T(x_n) + offset, found {v}"
            )));
        }
        let y_space = Space::weighted_lr(2.0, shifted.mapv(|v| 1.0 / v))?;
        let deriv = op.derivative(x.view())?;
        let op_norm = power_method(deriv.as_ref(), x_space, &y_space, spec.power)?.norm;
        let affine = &y_model - &deriv.apply(x.view())?;
        let fidelity = match spec.noise {
            NoiseModel::Poisson => DataFn::kl_poisson(y_obs.to_owned(), Some(affine))?,
            NoiseModel::Gaussian => DataFn::quadratic(&y_obs - &affine),
        };
        let (sigma, tau) = inner_steps(spec, op_norm);
        let mut options = SolverOptions::new(Schedule::Constant { sigma, tau }, op_norm);
        options.relaxation = spec.relaxation;
        options.max_iters = spec.inner_iters;
        options.stagnation_tol = spec.inner_stagnation_tol;
        let penalty = spec.penalty.scaled(alpha)?;
        let result = tikhonov_solve(
            deriv,
            x_space.clone(),
            y_space,
            fidelity,
            penalty,
            Some(x.clone()),
            &options,
        );
        let (next, trace) = match result {
            Ok(v) => v,
            Err(e @ Error::Divergence { .. }) => {
                aborted = Some(format!("Newton step {n}: {e}"));
                break;
            }
            Err(e) => return Err(e),
        };
        x = next;
        y_model = op.apply(x.view())?;
        let misfit = data_misfit(spec.noise, y_model.view(), y_obs)?;
        steps.push(NewtonStep {
            n,
            alpha,
            op_norm,
            misfit,
            trace,
        });
        alpha *= spec.rho;
    }
    Ok(IrnmResult {
        x,
        initial_misfit,
        steps,
        aborted,
    })
}

/// Constant inner steps just inside `sigma tau ||T'||^2 < C`.
fn inner_steps(spec: &IrnmSpec, op_norm: f64) -> (f64, f64) {
    let budget = 0.99 * spec.relaxation;
    let l = op_norm.max(f64::MIN_POSITIVE);
    match spec.sigma {
        Some(sigma) => (sigma, budget / (sigma * l * l)),
        None => {
            let s = budget.sqrt() / l;
            (s, s)
        }
    }
}
