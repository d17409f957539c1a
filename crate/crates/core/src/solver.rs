//! Primal-dual iteration with Bregman proximal steps.
//!
//! One step reads
//!
//! ```text
//! p+    = (sigma d g* + J_{Y*})^{-1}(J_{Y*}(p) + sigma T xhat)
//! x+    = (tau d f + J_X)^{-1}(J_X(x) - tau T* p+)
//! xhat+ = x+ + theta (x+ - x)
//! ```
//!
//! with three step-size schedules: constant steps, an accelerated schedule for
//! uniformly convex `f`, and constant steps with partial extrapolation when
//! both `f` and `g*` are uniformly convex.

use std::sync::Arc;
use std::time::Instant;

use ndarray::{Array1, ArrayView1, Zip};

use crate::error::{check_dim, invalid, Error, Result};
use crate::operators::LinearOperator;
use crate::resolvents::{DataFn, PrimalFn};
use crate::spaces::Space;

/// Default relaxation of the step-size condition.
pub const DEFAULT_RELAXATION: f64 = 0.96;
/// Misfit growth beyond this multiple of the initial misfit aborts a run.
pub const DIVERGENCE_FACTOR: f64 = 1e3;

/// `min_x max_p <T x, p> + f(x) - g*(p)`.
#[derive(Clone)]
pub struct SaddleProblem {
    pub op: Arc<dyn LinearOperator>,
    pub f: PrimalFn,
    pub g: DataFn,
    pub x_space: Space,
    pub y_space: Space,
}

impl std::fmt::Debug for SaddleProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SaddleProblem")
            .field("domain_dim", &self.op.domain_dim())
            .field("range_dim", &self.op.range_dim())
            .field("f", &self.f)
            .field("g", &self.g)
            .finish()
    }
}

impl SaddleProblem {
    pub fn new(
        op: Arc<dyn LinearOperator>,
        f: PrimalFn,
        g: DataFn,
        x_space: Space,
        y_space: Space,
    ) -> Result<Self> {
        check_dim(x_space.dim(), op.domain_dim())?;
        check_dim(y_space.dim(), op.range_dim())?;
        if let PrimalFn::Box { lower, .. } = &f {
            check_dim(x_space.dim(), lower.len())?;
        }
        match &g {
            DataFn::QuadraticShift { y0 } => check_dim(y_space.dim(), y0.len())?,
            DataFn::KlPoisson { y_obs, .. } => check_dim(y_space.dim(), y_obs.len())?,
            DataFn::Zero | DataFn::ZeroConjugate => {}
        }
        Ok(Self {
            op,
            f,
            g,
            x_space,
            y_space,
        })
    }

    /// Primal objective `g(T x) + f(x)`.
    pub fn primal_value(&self, x: ArrayView1<f64>) -> Result<f64> {
        let tx = self.op.apply(x)?;
        Ok(self.g.value(&self.y_space, tx.view())? + self.f.value(&self.x_space, x)?)
    }
}

/// Iterate `(x_k, p_k, xhat_k)` with cached duality images of `x_k` and `p_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct IterState {
    pub x: Array1<f64>,
    pub p: Array1<f64>,
    pub x_hat: Array1<f64>,
    pub jx: Array1<f64>,
    pub jp: Array1<f64>,
}

impl IterState {
    pub fn new(problem: &SaddleProblem, x: Array1<f64>, p: Array1<f64>) -> Result<Self> {
        check_dim(problem.x_space.dim(), x.len())?;
        check_dim(problem.y_space.dim(), p.len())?;
        let jx = problem.x_space.j(x.view())?;
        let jp = problem.y_space.dual().j(p.view())?;
        Ok(Self {
            x_hat: x.clone(),
            x,
            p,
            jx,
            jp,
        })
    }
}

/// One primal-dual step with steps `sigma`, `tau` and extrapolation `theta`.
pub fn cp_bs_step(
    problem: &SaddleProblem,
    state: &IterState,
    sigma: f64,
    tau: f64,
    theta: f64,
) -> Result<IterState> {
    if !(sigma > 0.0 && tau > 0.0) {
        return Err(invalid(format!(
            "steps must be positive, got sigma {sigma}, tau {tau}"
        )));
    }
    if !(0.0..=1.0).contains(&theta) {
        return Err(invalid(format!(
            "extrapolation must lie in [0, 1], got {theta}"
        )));
    }
    let t_xhat = problem.op.apply(state.x_hat.view())?;
    let dual_in = Zip::from(&state.jp)
        .and(&t_xhat)
        .map_collect(|&j, &t| j + sigma * t);
    let p = problem.g.resolve(&problem.y_space, sigma, dual_in.view())?;
    let tsp = problem.op.adjoint(p.view())?;
    let primal_in = Zip::from(&state.jx)
        .and(&tsp)
        .map_collect(|&j, &t| j - tau * t);
    let x = problem.f.resolve(&problem.x_space, tau, primal_in.view())?;
    let x_hat = Zip::from(&x)
        .and(&state.x)
        .map_collect(|&new, &old| new + theta * (new - old));
    let jx = problem.x_space.j(x.view())?;
    let jp = problem.y_space.dual().j(p.view())?;
    Ok(IterState {
        x,
        p,
        x_hat,
        jx,
        jp,
    })
}

/// Step-size schedule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Schedule {
    /// Constant steps with full extrapolation, `sigma tau ||T||^2 < C`.
    Constant { sigma: f64, tau: f64 },
    /// `theta_k = (1 + gamma tau_k)^{-1/2}`, `tau_{k+1} = theta_k tau_k`,
    /// `sigma_{k+1} = sigma_k / theta_k`, `sigma_0 tau_0 ||T||^2 <= C`.
    Accelerated { sigma0: f64, tau0: f64, gamma: f64 },
    /// `sigma = mu / delta`, `tau = mu / gamma`, `theta in [1/(1+mu), 1]`,
    /// `mu <= sqrt(gamma delta C) / ||T||`.
    Linear {
        gamma: f64,
        delta: f64,
        mu: f64,
        theta: f64,
    },
}

impl Schedule {
    pub fn variant(&self) -> Variant {
        match self {
            Self::Constant { .. } => Variant::V1,
            Self::Accelerated { .. } => Variant::V2,
            Self::Linear { .. } => Variant::V3,
        }
    }

    /// Steps of the first iteration.
    pub fn initial_steps(&self) -> (f64, f64) {
        match *self {
            Self::Constant { sigma, tau } => (sigma, tau),
            Self::Accelerated { sigma0, tau0, .. } => (sigma0, tau0),
            Self::Linear {
                gamma, delta, mu, ..
            } => (mu / delta, mu / gamma),
        }
    }

    /// Contraction factor `omega = (1 + theta) / (2 + mu)` of the linear schedule.
    pub fn linear_rate(&self) -> Option<f64> {
        match *self {
            Self::Linear { mu, theta, .. } => Some((1.0 + theta) / (2.0 + mu)),
            _ => None,
        }
    }

    /// Check the schedule against the operator norm and the declared moduli.
    pub fn validate(&self, problem: &SaddleProblem, op_norm: f64, relaxation: f64) -> Result<()> {
        if !(op_norm.is_finite() && op_norm >= 0.0) {
            return Err(invalid(format!(
                "operator norm must be finite, got {op_norm}"
            )));
        }
        if !(relaxation > 0.0 && relaxation <= 1.0) {
            return Err(invalid(format!(
                "relaxation must lie in (0, 1], got {relaxation}"
            )));
        }
        let l2 = op_norm * op_norm;
        match *self {
            Self::Constant { sigma, tau } => {
                if !(sigma > 0.0 && tau > 0.0) {
                    return Err(invalid("constant steps must be positive"));
                }
                if sigma * tau * l2 >= relaxation {
                    return Err(invalid(format!(
                        "sigma tau ||T||^2 = {} must stay below {relaxation}",
                        sigma * tau * l2
                    )));
                }
            }
            Self::Accelerated {
                sigma0,
                tau0,
                gamma,
            } => {
                if !(gamma > 0.0) {
                    return Err(invalid(format!("gamma must be positive, got {gamma}")));
                }
                if !(sigma0 > 0.0 && tau0 > 0.0) {
                    return Err(invalid("initial steps must be positive"));
                }
                if sigma0 * tau0 * l2 > relaxation {
                    return Err(invalid(format!(
                        "sigma0 tau0 ||T||^2 = {} exceeds {relaxation}",
                        sigma0 * tau0 * l2
                    )));
                }
                if problem.f.modulus() < gamma {
                    return Err(invalid(format!(
                        "primal functional has modulus {} below gamma {gamma}",
                        problem.f.modulus()
                    )));
                }
            }
            Self::Linear {
                gamma,
                delta,
                mu,
                theta,
            } => {
                if !(gamma > 0.0 && delta > 0.0 && mu > 0.0) {
                    return Err(invalid("gamma, delta and mu must be positive"));
                }
                if mu * op_norm > (gamma * delta * relaxation).sqrt() {
                    return Err(invalid(format!(
                        "mu = {mu} exceeds sqrt(gamma delta C) / ||T|| = {}",
                        (gamma * delta * relaxation).sqrt() / op_norm
                    )));
                }
                if !(theta >= 1.0 / (1.0 + mu) && theta <= 1.0) {
                    return Err(invalid(format!(
                        "theta = {theta} must lie in [1/(1+mu), 1]"
                    )));
                }
                if problem.f.modulus() < gamma {
                    return Err(invalid(format!(
                        "primal functional has modulus {} below gamma {gamma}",
                        problem.f.modulus()
                    )));
                }
                if problem.g.modulus() < delta {
                    return Err(invalid(format!(
                        "dual functional has modulus {} below delta {delta}",
                        problem.g.modulus()
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    V1,
    V2,
    V3,
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::V1 => "v1",
            Self::V2 => "v2",
            Self::V3 => "v3",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "v1" | "1" => Ok(Self::V1),
            "v2" | "2" => Ok(Self::V2),
            "v3" | "3" => Ok(Self::V3),
            _ => Err(invalid(format!("unknown solver variant {s:?}"))),
        }
    }
}

/// Known saddle point, enabling misfit and Lyapunov diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct SaddlePoint {
    pub x: Array1<f64>,
    pub p: Array1<f64>,
}

/// Boxes `B1 x B2` for the partial primal-dual gap.
#[derive(Clone, Debug, PartialEq)]
pub struct GapBox {
    pub x_lower: Array1<f64>,
    pub x_upper: Array1<f64>,
    pub p_lower: Array1<f64>,
    pub p_upper: Array1<f64>,
}

impl GapBox {
    /// Symmetric cube `[-radius, radius]` in both variables.
    pub fn cube(x_dim: usize, p_dim: usize, radius: f64) -> Self {
        Self {
            x_lower: Array1::from_elem(x_dim, -radius),
            x_upper: Array1::from_elem(x_dim, radius),
            p_lower: Array1::from_elem(p_dim, -radius),
            p_upper: Array1::from_elem(p_dim, radius),
        }
    }
}

/// Reference minimizer for the distance criterion, measured in `l^1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Reference {
    pub x: Array1<f64>,
    /// Stop once `||x_k - x_ref||_1 <= tol`.
    pub tol: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    pub schedule: Schedule,
    /// Estimate or upper bound of `||T||_{X -> Y}`.
    pub op_norm: f64,
    pub relaxation: f64,
    pub max_iters: usize,
    pub reference: Option<Reference>,
    /// Relative change of both iterates below which the run stops; 0 disables.
    pub stagnation_tol: f64,
    pub saddle: Option<SaddlePoint>,
    pub gap_box: Option<GapBox>,
    /// Keep a record every this many iterations (the last one is always kept).
    pub record_every: usize,
    pub divergence_factor: f64,
}

impl SolverOptions {
    pub fn new(schedule: Schedule, op_norm: f64) -> Self {
        Self {
            schedule,
            op_norm,
            relaxation: DEFAULT_RELAXATION,
            max_iters: 1000,
            reference: None,
            stagnation_tol: 1e-12,
            saddle: None,
            gap_box: None,
            record_every: 1,
            divergence_factor: DIVERGENCE_FACTOR,
        }
    }
}

/// Per-iteration diagnostics. Iteration `k = 0` is the starting point.
#[derive(Clone, Debug, PartialEq)]
pub struct IterateRecord {
    pub k: usize,
    pub elapsed_s: f64,
    pub err_ref: Option<f64>,
    /// `B_{Y*}(pbar, p_k)` for a known saddle point.
    pub bregman_p: Option<f64>,
    /// `B_X(xbar, x_k)` for a known saddle point.
    pub bregman_x: Option<f64>,
    /// `B_{Y*}(pbar, p_k) / sigma_k + B_X(xbar, x_k) / tau_k`.
    pub misfit: Option<f64>,
    /// Partial gap at the ergodic means `(1/k) sum_{i<=k} (x_i, p_i)`.
    pub gap: Option<f64>,
    pub tau: f64,
    pub sigma: f64,
    pub theta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    MaxIterations,
    ReferenceReached,
    Stagnated,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::MaxIterations => "max_iterations",
            Self::ReferenceReached => "reference_reached",
            Self::Stagnated => "stagnated",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug)]
pub struct Trace {
    pub records: Vec<IterateRecord>,
    pub state: IterState,
    pub x_ergodic: Array1<f64>,
    pub p_ergodic: Array1<f64>,
    pub iterations: usize,
    pub termination: Termination,
}

/// `B_{Y*}(pbar, p) / sigma + B_X(xbar, x) / tau`.
#[allow(clippy::too_many_arguments)]
pub fn misfit(
    x_space: &Space,
    y_space: &Space,
    x: ArrayView1<f64>,
    p: ArrayView1<f64>,
    x_bar: ArrayView1<f64>,
    p_bar: ArrayView1<f64>,
    sigma: f64,
    tau: f64,
) -> Result<f64> {
    if !(sigma > 0.0 && tau > 0.0) {
        return Err(invalid("misfit weights must be positive"));
    }
    let bp = y_space.dual().bregman(p_bar, p)?;
    let bx = x_space.bregman(x_bar, x)?;
    Ok(bp / sigma + bx / tau)
}

/// `max_{p' in B2} (<T x, p'> - g*(p')) + f(x) - min_{x' in B1} (<T x', p> + f(x')) + g*(p)`.
pub fn partial_gap(
    problem: &SaddleProblem,
    x: ArrayView1<f64>,
    p: ArrayView1<f64>,
    boxes: &GapBox,
) -> Result<f64> {
    let tx = problem.op.apply(x)?;
    let sup_p = problem.g.max_linear_over_box(
        &problem.y_space,
        tx.view(),
        boxes.p_lower.view(),
        boxes.p_upper.view(),
    )?;
    let tsp = problem.op.adjoint(p)?;
    let inf_x = problem.f.min_linear_over_box(
        &problem.x_space,
        tsp.view(),
        boxes.x_lower.view(),
        boxes.x_upper.view(),
    )?;
    let fx = problem.f.value(&problem.x_space, x)?;
    let gp = problem.g.conjugate_value(&problem.y_space, p)?;
    Ok(sup_p + fx - inf_x + gp)
}

/// Largest vertex count enumerated by [`bregman_sup_over_box`].
const MAX_ENUMERATED_DIM: usize = 20;

/// `sup_{u in [lower, upper]} B(u, center)`.
///
/// The distance is convex in `u`, so the supremum sits at a vertex. Weighted
/// Euclidean spaces are separable; otherwise all vertices are enumerated.
pub fn bregman_sup_over_box(
    space: &Space,
    center: ArrayView1<f64>,
    lower: ArrayView1<f64>,
    upper: ArrayView1<f64>,
) -> Result<f64> {
    let n = space.dim();
    check_dim(n, center.len())?;
    check_dim(n, lower.len())?;
    check_dim(n, upper.len())?;
    if let (Some(w), true) = (space.weights(), space.exponent() == 2.0) {
        let mut acc = 0.0;
        for j in 0..n {
            let d = (lower[j] - center[j])
                .abs()
                .max((upper[j] - center[j]).abs());
            acc += 0.5 * w[j] * d * d;
        }
        return Ok(acc);
    }
    if n > MAX_ENUMERATED_DIM {
        return Err(Error::Unsupported(format!(
            "vertex enumeration in dimension {n} exceeds {MAX_ENUMERATED_DIM}"
        )));
    }
    let jc = space.j(center)?;
    let mut best = f64::NEG_INFINITY;
    let mut u = Array1::zeros(n);
    for mask in 0u64..(1u64 << n) {
        for j in 0..n {
            u[j] = if mask >> j & 1 == 1 {
                upper[j]
            } else {
                lower[j]
            };
        }
        best = best.max(space.bregman_with(u.view(), center, jc.view())?);
    }
    Ok(best)
}

fn l1_distance(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    Zip::from(&a)
        .and(&b)
        .fold(0.0, |acc, &x, &y| acc + (x - y).abs())
}

fn max_abs(v: ArrayView1<f64>) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn relative_change(new: ArrayView1<f64>, old: ArrayView1<f64>) -> f64 {
    let d = Zip::from(&new)
        .and(&old)
        .fold(0.0_f64, |m, &a, &b| m.max((a - b).abs()));
    if d == 0.0 {
        0.0
    } else {
        d / max_abs(new).max(max_abs(old))
    }
}

/// Run the iteration from `(x0, p0)` under the configured schedule.
pub fn solve(
    problem: &SaddleProblem,
    x0: Array1<f64>,
    p0: Array1<f64>,
    options: &SolverOptions,
) -> Result<Trace> {
    options
        .schedule
        .validate(problem, options.op_norm, options.relaxation)?;
    if options.record_every == 0 {
        return Err(invalid("record_every must be at least 1"));
    }
    if let Some(s) = &options.saddle {
        check_dim(problem.x_space.dim(), s.x.len())?;
        check_dim(problem.y_space.dim(), s.p.len())?;
    }
    if let Some(r) = &options.reference {
        check_dim(problem.x_space.dim(), r.x.len())?;
    }
    let start = Instant::now();
    let y_dual = problem.y_space.dual();
    let mut state = IterState::new(problem, x0, p0)?;
    let (mut sigma, mut tau) = options.schedule.initial_steps();
    let step_product = sigma * tau;
    let theta_of = |tau: f64| match options.schedule {
        Schedule::Constant { .. } => 1.0,
        Schedule::Accelerated { gamma, .. } => 1.0 / (1.0 + gamma * tau).sqrt(),
        Schedule::Linear { theta, .. } => theta,
    };
    let mut x_sum = Array1::<f64>::zeros(problem.x_space.dim());
    let mut p_sum = Array1::<f64>::zeros(problem.y_space.dim());

    let diagnose = |k: usize,
                    state: &IterState,
                    sigma: f64,
                    tau: f64,
                    theta: f64,
                    ergodic: Option<(ArrayView1<f64>, ArrayView1<f64>)>|
     -> Result<IterateRecord> {
        let err_ref = options
            .reference
            .as_ref()
            .map(|r| l1_distance(state.x.view(), r.x.view()));
        let (bregman_p, bregman_x, misfit) = match &options.saddle {
            Some(s) => {
                let bp = y_dual.bregman_with(s.p.view(), state.p.view(), state.jp.view())?;
                let bx =
                    problem
                        .x_space
                        .bregman_with(s.x.view(), state.x.view(), state.jx.view())?;
                (Some(bp), Some(bx), Some(bp / sigma + bx / tau))
            }
            None => (None, None, None),
        };
        let gap = match (&options.gap_box, ergodic) {
            (Some(b), Some((xe, pe))) => Some(partial_gap(problem, xe, pe, b)?),
            _ => None,
        };
        Ok(IterateRecord {
            k,
            elapsed_s: start.elapsed().as_secs_f64(),
            err_ref,
            bregman_p,
            bregman_x,
            misfit,
            gap,
            tau,
            sigma,
            theta,
        })
    };

    let mut records = Vec::new();
    let first = diagnose(0, &state, sigma, tau, theta_of(tau), None)?;
    let misfit0 = first.misfit;
    let reached = |rec: &IterateRecord| match (&options.reference, rec.err_ref) {
        (Some(Reference { tol: Some(tol), .. }), Some(e)) => e <= *tol,
        _ => false,
    };
    if reached(&first) {
        records.push(first);
        return Ok(Trace {
            x_ergodic: state.x.clone(),
            p_ergodic: state.p.clone(),
            records,
            state,
            iterations: 0,
            termination: Termination::ReferenceReached,
        });
    }
    records.push(first);

    let mut termination = Termination::MaxIterations;
    let mut iterations = 0;
    for k in 1..=options.max_iters {
        let theta = theta_of(tau);
        let next =
            cp_bs_step(problem, &state, sigma, tau, theta).map_err(|e| Error::Resolvent {
                iteration: k,
                source: Box::new(e),
            })?;
        if next.x.iter().chain(next.p.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                iteration: k,
                reason: "non-finite iterate".into(),
            });
        }
        let stagnated = options.stagnation_tol > 0.0
            && relative_change(next.x.view(), state.x.view()) <= options.stagnation_tol
            && relative_change(next.p.view(), state.p.view()) <= options.stagnation_tol;
        state = next;
        iterations = k;
        x_sum += &state.x;
        p_sum += &state.p;
        // Steps used to produce this iterate label its diagnostics.
        let (step_sigma, step_tau) = (sigma, tau);
        if let Schedule::Accelerated { .. } = options.schedule {
            tau *= theta;
            sigma = step_product / tau;
        }
        let last = k == options.max_iters;
        let want_record = last || stagnated || k % options.record_every == 0;
        if want_record || options.saddle.is_some() || options.reference.is_some() {
            let ergodic = (want_record && options.gap_box.is_some())
                .then(|| (&x_sum / k as f64, &p_sum / k as f64));
            let rec = diagnose(
                k,
                &state,
                step_sigma,
                step_tau,
                theta,
                ergodic.as_ref().map(|(xe, pe)| (xe.view(), pe.view())),
            )?;
            if let (Some(m0), Some(m)) = (misfit0, rec.misfit) {
                if m0 > 0.0 && m > options.divergence_factor * m0 {
                    return Err(Error::Divergence {
                        iteration: k,
                        reason: format!(
                            "misfit {m:e} exceeds {} times the initial {m0:e}",
                            options.divergence_factor
                        ),
                    });
                }
            }
            let done = reached(&rec);
            if want_record || done {
                records.push(rec);
            }
            if done {
                termination = Termination::ReferenceReached;
                break;
            }
        }
        if stagnated {
            termination = Termination::Stagnated;
            break;
        }
    }
    let n = iterations.max(1) as f64;
    let (x_ergodic, p_ergodic) = if iterations == 0 {
        (state.x.clone(), state.p.clone())
    } else {
        (&x_sum / n, &p_sum / n)
    };
    Ok(Trace {
        records,
        state,
        x_ergodic,
        p_ergodic,
        iterations,
        termination,
    })
}

/// Constant steps with `theta = 1`.
pub fn run_v1(
    problem: &SaddleProblem,
    x0: Array1<f64>,
    p0: Array1<f64>,
    sigma: f64,
    tau: f64,
    mut options: SolverOptions,
) -> Result<Trace> {
    options.schedule = Schedule::Constant { sigma, tau };
    solve(problem, x0, p0, &options)
}

/// Accelerated schedule for a primal functional of modulus `gamma`.
pub fn run_v2(
    problem: &SaddleProblem,
    x0: Array1<f64>,
    p0: Array1<f64>,
    sigma0: f64,
    tau0: f64,
    gamma: f64,
    mut options: SolverOptions,
) -> Result<Trace> {
    options.schedule = Schedule::Accelerated {
        sigma0,
        tau0,
        gamma,
    };
    solve(problem, x0, p0, &options)
}

/// Linearly convergent schedule for moduli `gamma` and `delta`.
#[allow(clippy::too_many_arguments)]
pub fn run_v3(
    problem: &SaddleProblem,
    x0: Array1<f64>,
    p0: Array1<f64>,
    gamma: f64,
    delta: f64,
    mu: f64,
    theta: f64,
    mut options: SolverOptions,
) -> Result<Trace> {
    options.schedule = Schedule::Linear {
        gamma,
        delta,
        mu,
        theta,
    };
    solve(problem, x0, p0, &options)
}

/// `(1 - omega) delta B_{Y*}(pbar, p) + gamma B_X(xbar, x)`.
pub fn lyapunov(omega: f64, gamma: f64, delta: f64, bregman_p: f64, bregman_x: f64) -> f64 {
    (1.0 - omega) * delta * bregman_p + gamma * bregman_x
}
