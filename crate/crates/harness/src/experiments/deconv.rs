//! Spike deconvolution with an `l^1` penalty, solved in `X = l^r`.
//!
//! Step sizes given as labels refer to a full-scale grid with operator norm
//! `full_scale_norm`; they are rescaled by `full_scale_norm / ||T||_2` so that
//! `sigma ||T||` matches across grid sizes.

use std::sync::Arc;

use banach_pd::irnm::initial_dual;
use banach_pd::operators::{convolution_operator, power_method, NormEstimate, PowerMethodOptions};
use banach_pd::solver::{run_v1, run_v3, Reference, Termination, Trace, DEFAULT_RELAXATION};
use banach_pd::{
    DataFn, DenseOperator, LinearOperator, PrimalFn, SaddleProblem, Schedule, SolverOptions, Space,
};
use ndarray::Array1;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::artifacts::{fmt_f64, ExperimentOutput, RunArtifact, Table};
use crate::config::{DeconvConfig, DeconvMode, ExperimentConfig, VariantName};
use crate::error::{HarnessError, HarnessResult};
use crate::experiments::{base_metadata, mean, median, merge, LIBRARY_VERSION};
use crate::noise::{make_noise, NoiseSpec};
use crate::reference::{reference_minimizer, ReferenceCache, ReferenceOutcome, ReferenceSettings};

const NORM_OPTIONS: PowerMethodOptions = PowerMethodOptions {
    max_iters: 20_000,
    tol: 1e-12,
    seed: 0x5eed,
};

/// Operator, ground truth and exact data.
#[derive(Clone, Debug)]
pub struct DeconvSetup {
    pub op: Arc<DenseOperator>,
    pub x_true: Array1<f64>,
    pub y_true: Array1<f64>,
    /// `||T||_{l^2 -> l^2}`.
    pub norm_l2: f64,
}

pub fn setup(d: &DeconvConfig) -> HarnessResult<DeconvSetup> {
    let op = Arc::new(convolution_operator(d.decay, d.n_x, d.n_y)?);
    let mut x_true = Array1::zeros(d.n_x);
    for s in &d.spikes {
        x_true[s.index] += s.amplitude;
    }
    let y_true = LinearOperator::apply(op.as_ref(), x_true.view())?;
    let norm_l2 = op_norm(&op, 2.0)?.norm;
    Ok(DeconvSetup {
        op,
        x_true,
        y_true,
        norm_l2,
    })
}

/// `||T||_{l^r -> l^2}` by the power method.
pub fn op_norm(op: &DenseOperator, r: f64) -> HarnessResult<NormEstimate> {
    let (rows, cols) = op.matrix().dim();
    Ok(power_method(
        op,
        &Space::lr(r, cols)?,
        &Space::hilbert(rows),
        NORM_OPTIONS,
    )?)
}

pub fn noise_spec(d: &DeconvConfig) -> NoiseSpec {
    NoiseSpec::Gaussian {
        level: d.noise_level,
    }
}

pub fn noisy_data(
    setup: &DeconvSetup,
    d: &DeconvConfig,
    seed: u64,
    rep: u64,
) -> HarnessResult<Array1<f64>> {
    make_noise(setup.y_true.view(), noise_spec(d), seed, rep)
}

/// `min ||T x - y||^2 / 2 + alpha ||x||_1` over `X = l^r`.
pub fn l1_problem(
    setup: &DeconvSetup,
    y_obs: Array1<f64>,
    r: f64,
    alpha: f64,
) -> HarnessResult<SaddleProblem> {
    let (rows, cols) = setup.op.matrix().dim();
    Ok(SaddleProblem::new(
        setup.op.clone(),
        PrimalFn::l1(alpha)?,
        DataFn::quadratic(y_obs),
        Space::lr(r, cols)?,
        Space::hilbert(rows),
    )?)
}

/// `x0 = 0` and `p0 = T x0 - y`.
pub fn start(problem: &SaddleProblem) -> HarnessResult<(Array1<f64>, Array1<f64>)> {
    let x0 = Array1::zeros(problem.x_space.dim());
    let tx0 = problem.op.apply(x0.view())?;
    let p0 = initial_dual(&problem.g, &problem.y_space, tx0.view())?;
    Ok((x0, p0))
}

/// Constant `C` of the step rule for `X = l^r`.
pub fn relaxation(d: &DeconvConfig, r: f64) -> f64 {
    d.relaxation
        .unwrap_or(if r == 2.0 { 1.0 } else { DEFAULT_RELAXATION })
}

/// Dual step for a full-scale label.
pub fn scaled_sigma(d: &DeconvConfig, label: f64, norm_l2: f64) -> f64 {
    label * d.full_scale_norm / norm_l2
}

/// `tau = safety C / (sigma ||T||^2)`.
pub fn primal_step(safety: f64, c: f64, sigma: f64, norm: f64) -> f64 {
    safety * c / (sigma * norm * norm)
}

fn cache_key<T: Serialize>(
    cfg: &ExperimentConfig,
    purpose: &str,
    rep: u64,
    extra: &T,
) -> HarnessResult<String> {
    ReferenceCache::key(&json!({
        "purpose": purpose,
        "library_version": LIBRARY_VERSION,
        "config": cfg,
        "repetition": rep,
        "settings": extra,
    }))
}

/// Long constant-step run on the `l^1` problem for repetition `rep`.
pub fn l1_reference(
    cfg: &ExperimentConfig,
    setup: &DeconvSetup,
    y_obs: &Array1<f64>,
    rep: u64,
    cache: Option<&ReferenceCache>,
) -> HarnessResult<ReferenceOutcome> {
    let d = &cfg.deconv;
    let r = d.reference.r;
    let problem = l1_problem(setup, y_obs.clone(), r, d.alpha)?;
    let norm = op_norm(&setup.op, r)?.norm;
    let c = relaxation(d, r);
    let sigma = scaled_sigma(d, d.sigma_label, setup.norm_l2);
    let settings = ReferenceSettings {
        sigma,
        tau: primal_step(d.reference.step_safety, c, sigma, norm),
        op_norm: norm,
        relaxation: c,
        budget: d.reference.budget,
        stagnation_tol: d.reference.stagnation_tol,
    };
    let key = cache_key(cfg, "deconv_l1", rep, &settings)?;
    let (x0, p0) = start(&problem)?;
    let cache = cache.filter(|_| d.reference.use_cache);
    reference_minimizer(
        &problem,
        x0,
        p0,
        &settings,
        cache.map(|c| (c, key.as_str())),
    )
}

/// Constant-step run until the `l^1` distance to `x_ref` drops to `tol`.
#[allow(clippy::too_many_arguments)]
pub fn run_to_tolerance(
    problem: &SaddleProblem,
    sigma: f64,
    tau: f64,
    op_norm: f64,
    c: f64,
    x_ref: &Array1<f64>,
    tol: f64,
    max_iters: usize,
    record_every: usize,
) -> HarnessResult<Trace> {
    let (x0, p0) = start(problem)?;
    let mut options = SolverOptions::new(Schedule::Constant { sigma, tau }, op_norm);
    options.relaxation = c;
    options.max_iters = max_iters;
    options.stagnation_tol = 0.0;
    options.record_every = record_every;
    options.reference = Some(Reference {
        x: x_ref.clone(),
        tol: Some(tol),
    });
    Ok(run_v1(problem, x0, p0, sigma, tau, options)?)
}

fn reached(trace: &Trace) -> Option<usize> {
    (trace.termination == Termination::ReferenceReached).then_some(trace.iterations)
}

pub fn run(cfg: &ExperimentConfig, cache: &ReferenceCache) -> HarnessResult<ExperimentOutput> {
    if cfg.deconv.variant != VariantName::V1 {
        return Err(HarnessError::Config(
            "the l^1 penalty is not uniformly convex; deconvolution runs use variant v1".into(),
        ));
    }
    match cfg.deconv.mode {
        DeconvMode::Single => single(cfg, cache),
        DeconvMode::Table1 => {
            let summary = table1(cfg, Some(cache))?;
            Ok(summary.into_output(cfg))
        }
        DeconvMode::Sweep => sweep(cfg, cache),
        DeconvMode::Compare => {
            let summary = compare(cfg, Some(cache))?;
            Ok(summary.into_output(cfg))
        }
    }
}

fn single(cfg: &ExperimentConfig, cache: &ReferenceCache) -> HarnessResult<ExperimentOutput> {
    let d = &cfg.deconv;
    let setup = setup(d)?;
    let y_obs = noisy_data(&setup, d, cfg.seed, 0)?;
    let reference = l1_reference(cfg, &setup, &y_obs, 0, Some(cache))?;
    let problem = l1_problem(&setup, y_obs, d.r, d.alpha)?;
    let norm = op_norm(&setup.op, d.r)?;
    let c = relaxation(d, d.r);
    let sigma = d
        .sigma
        .unwrap_or(scaled_sigma(d, d.sigma_label, setup.norm_l2));
    let tau = d
        .tau
        .unwrap_or(primal_step(d.step_safety, c, sigma, norm.norm));
    let trace = run_to_tolerance(
        &problem,
        sigma,
        tau,
        norm.norm,
        c,
        &reference.x,
        d.tol,
        d.max_iters,
        cfg.record_every,
    )?;
    let name = format!("deconv_r{}", d.r);
    let metadata = merge(
        base_metadata(cfg, "deconv"),
        json!({
            "mode": "single",
            "variant": "v1",
            "space_r": d.r,
            "op_norm": norm.norm,
            "op_norm_iterations": norm.iterations,
            "op_norm_converged": norm.converged,
            "op_norm_l2": setup.norm_l2,
            "relaxation_c": c,
            "sigma": sigma,
            "tau": tau,
            "noise": noise_spec(d),
            "noise_interpretation": "relative l2 perturbation y + level ||y|| xi / ||xi||",
            "tol": d.tol,
            "termination": trace.termination.to_string(),
            "iterations": trace.iterations,
            "iterations_to_tol": reached(&trace),
            "reference_iterations": reference.iterations,
            "reference_from_cache": reference.from_cache,
        }),
    );
    Ok(ExperimentOutput {
        runs: vec![RunArtifact {
            name,
            reconstruction: Some(trace.state.x.clone()),
            records: trace.records,
            metadata,
        }],
        tables: Vec::new(),
        summary: None,
    })
}

/// One `(sigma, space)` cell of the iteration-count table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table1Cell {
    pub sigma_label: f64,
    pub sigma: f64,
    pub space_r: f64,
    pub tau: f64,
    pub relaxation_c: f64,
    pub op_norm: f64,
    /// Iterations per repetition; `None` when the cap was hit.
    pub counts: Vec<Option<usize>>,
    pub median: f64,
    pub mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderingCheck {
    pub sigma_label: f64,
    pub smaller_r: f64,
    pub larger_r: f64,
    pub median_smaller_r: f64,
    pub median_larger_r: f64,
    /// Median for the smaller exponent strictly below the larger one.
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table1Summary {
    pub op_norm_l2: f64,
    pub cells: Vec<Table1Cell>,
    pub ordering: Vec<OrderingCheck>,
    pub reference_iterations: Vec<usize>,
}

impl Table1Summary {
    pub fn ordering_holds(&self) -> bool {
        !self.ordering.is_empty() && self.ordering.iter().all(|o| o.holds)
    }

    pub fn into_output(self, cfg: &ExperimentConfig) -> ExperimentOutput {
        let header = [
            "sigma_label",
            "sigma",
            "space_r",
            "tau",
            "relaxation_c",
            "op_norm",
            "median",
            "mean",
            "reached",
            "counts",
        ]
        .map(String::from)
        .to_vec();
        let rows = self
            .cells
            .iter()
            .map(|c| {
                let counts = c
                    .counts
                    .iter()
                    .map(|n| n.map_or("none".to_string(), |n| n.to_string()))
                    .collect::<Vec<_>>()
                    .join(";");
                vec![
                    fmt_f64(c.sigma_label),
                    fmt_f64(c.sigma),
                    fmt_f64(c.space_r),
                    fmt_f64(c.tau),
                    fmt_f64(c.relaxation_c),
                    fmt_f64(c.op_norm),
                    fmt_f64(c.median),
                    fmt_f64(c.mean),
                    c.counts.iter().filter(|n| n.is_some()).count().to_string(),
                    counts,
                ]
            })
            .collect();
        let ordering_holds = self.ordering_holds();
        if !ordering_holds {
            eprintln!("table1: ordering of medians does not hold in every column");
        }
        let summary = merge(
            base_metadata(cfg, "deconv"),
            json!({
                "mode": "table1",
                "variant": "v1",
                "noise": noise_spec(&cfg.deconv),
                "noise_interpretation": "relative l2 perturbation y + level ||y|| xi / ||xi||",
                "ordering_holds": ordering_holds,
                "table": self,
            }),
        );
        ExperimentOutput {
            runs: Vec::new(),
            tables: vec![Table {
                name: "table1".into(),
                header,
                rows,
            }],
            summary: Some(("table1".into(), summary)),
        }
    }
}

/// Iterations to the reference tolerance over spaces, step labels and
/// noise seeds. Repetitions run in parallel; results are ordered by seed.
pub fn table1(
    cfg: &ExperimentConfig,
    cache: Option<&ReferenceCache>,
) -> HarnessResult<Table1Summary> {
    let d = &cfg.deconv;
    let setup = setup(d)?;
    let norms = d
        .table_spaces
        .iter()
        .map(|&r| op_norm(&setup.op, r).map(|n| n.norm))
        .collect::<HarnessResult<Vec<_>>>()?;
    let mut cells: Vec<Table1Cell> = Vec::new();
    for &label in &d.table_sigmas {
        for (&r, &norm) in d.table_spaces.iter().zip(&norms) {
            let sigma = scaled_sigma(d, label, setup.norm_l2);
            let c = relaxation(d, r);
            cells.push(Table1Cell {
                sigma_label: label,
                sigma,
                space_r: r,
                tau: primal_step(d.step_safety, c, sigma, norm),
                relaxation_c: c,
                op_norm: norm,
                counts: Vec::new(),
                median: f64::NAN,
                mean: f64::NAN,
            });
        }
    }
    let per_rep = (0..d.repetitions as u64)
        .into_par_iter()
        .map(|rep| -> HarnessResult<(usize, Vec<Option<usize>>)> {
            let y_obs = noisy_data(&setup, d, cfg.seed, rep)?;
            let reference = l1_reference(cfg, &setup, &y_obs, rep, cache)?;
            let counts = cells
                .iter()
                .map(|cell| {
                    let problem = l1_problem(&setup, y_obs.clone(), cell.space_r, d.alpha)?;
                    let trace = run_to_tolerance(
                        &problem,
                        cell.sigma,
                        cell.tau,
                        cell.op_norm,
                        cell.relaxation_c,
                        &reference.x,
                        d.tol,
                        d.max_iters,
                        d.max_iters.max(1),
                    )?;
                    Ok(reached(&trace))
                })
                .collect::<HarnessResult<Vec<_>>>()?;
            Ok((reference.iterations, counts))
        })
        .collect::<HarnessResult<Vec<_>>>()?;
    for (i, cell) in cells.iter_mut().enumerate() {
        cell.counts = per_rep.iter().map(|(_, c)| c[i]).collect();
        cell.median = median(&cell.counts);
        cell.mean = mean(&cell.counts);
    }
    let mut ordering = Vec::new();
    for &label in &d.table_sigmas {
        let column: Vec<&Table1Cell> = cells.iter().filter(|c| c.sigma_label == label).collect();
        let lo = column.iter().min_by(|a, b| a.space_r.total_cmp(&b.space_r));
        let hi = column.iter().max_by(|a, b| a.space_r.total_cmp(&b.space_r));
        if let (Some(lo), Some(hi)) = (lo, hi) {
            if lo.space_r < hi.space_r {
                ordering.push(OrderingCheck {
                    sigma_label: label,
                    smaller_r: lo.space_r,
                    larger_r: hi.space_r,
                    median_smaller_r: lo.median,
                    median_larger_r: hi.median,
                    holds: lo.median < hi.median,
                });
            }
        }
    }
    Ok(Table1Summary {
        op_norm_l2: setup.norm_l2,
        cells,
        ordering,
        reference_iterations: per_rep.iter().map(|(n, _)| *n).collect(),
    })
}

/// Grid search over dual-step labels and primal-step fractions for `X = l^r`.
fn sweep(cfg: &ExperimentConfig, cache: &ReferenceCache) -> HarnessResult<ExperimentOutput> {
    let d = &cfg.deconv;
    let setup = setup(d)?;
    let y_obs = noisy_data(&setup, d, cfg.seed, 0)?;
    let reference = l1_reference(cfg, &setup, &y_obs, 0, Some(cache))?;
    let problem = l1_problem(&setup, y_obs, d.r, d.alpha)?;
    let norm = op_norm(&setup.op, d.r)?.norm;
    let c = relaxation(d, d.r);
    let grid: Vec<(f64, f64)> = d
        .table_sigmas
        .iter()
        .flat_map(|&l| d.sweep_fractions.iter().map(move |&f| (l, f)))
        .collect();
    let results = grid
        .par_iter()
        .map(
            |&(label, fraction)| -> HarnessResult<(f64, f64, Option<usize>)> {
                let sigma = scaled_sigma(d, label, setup.norm_l2);
                let tau = primal_step(fraction, c, sigma, norm);
                let trace = run_to_tolerance(
                    &problem,
                    sigma,
                    tau,
                    norm,
                    c,
                    &reference.x,
                    d.tol,
                    d.max_iters,
                    d.max_iters.max(1),
                )?;
                Ok((sigma, tau, reached(&trace)))
            },
        )
        .collect::<HarnessResult<Vec<_>>>()?;
    let rows: Vec<Vec<String>> = grid
        .iter()
        .zip(&results)
        .map(|(&(label, fraction), &(sigma, tau, n))| {
            vec![
                fmt_f64(label),
                fmt_f64(fraction),
                fmt_f64(sigma),
                fmt_f64(tau),
                n.map_or("none".into(), |n| n.to_string()),
            ]
        })
        .collect();
    let best = grid
        .iter()
        .zip(&results)
        .filter_map(|(g, r)| r.2.map(|n| (g, r, n)))
        .min_by_key(|(_, _, n)| *n)
        .map(|(&(label, fraction), &(sigma, tau, _), n)| {
            json!({"sigma_label": label, "fraction": fraction, "sigma": sigma, "tau": tau, "iterations": n})
        });
    let summary = merge(
        base_metadata(cfg, "deconv"),
        json!({
            "mode": "sweep",
            "space_r": d.r,
            "op_norm": norm,
            "relaxation_c": c,
            "best": best,
            "reference_iterations": reference.iterations,
        }),
    );
    Ok(ExperimentOutput {
        runs: Vec::new(),
        tables: vec![Table {
            name: format!("sweep_r{}", d.r),
            header: ["sigma_label", "fraction", "sigma", "tau", "iterations"]
                .map(String::from)
                .to_vec(),
            rows,
        }],
        summary: Some((format!("sweep_r{}", d.r), summary)),
    })
}

/// Linear schedule against balanced constant steps on
/// `min ||T x - y||^2 / 2 + alpha ||x||_r^2 / 2`.
#[derive(Clone, Debug)]
pub struct CompareSummary {
    pub alpha: f64,
    pub op_norm: f64,
    pub mu: f64,
    pub theta: f64,
    pub v1_step: f64,
    pub relaxation_c: f64,
    pub v3: Trace,
    pub v1: Trace,
    pub reference_iterations: usize,
}

impl CompareSummary {
    pub fn v3_iterations(&self) -> Option<usize> {
        reached(&self.v3)
    }

    pub fn v1_iterations(&self) -> Option<usize> {
        reached(&self.v1)
    }

    /// V3 count over V1 count; infinite when V3 misses and zero when only V1 misses.
    pub fn ratio(&self) -> f64 {
        match (self.v3_iterations(), self.v1_iterations()) {
            (Some(a), Some(b)) => a as f64 / b.max(1) as f64,
            (Some(_), None) => 0.0,
            (None, _) => f64::INFINITY,
        }
    }

    pub fn into_output(self, cfg: &ExperimentConfig) -> ExperimentOutput {
        let meta = |variant: &str, trace: &Trace| {
            merge(
                base_metadata(cfg, "deconv"),
                json!({
                    "mode": "compare",
                    "variant": variant,
                    "space_r": cfg.deconv.compare.r,
                    "alpha": self.alpha,
                    "op_norm": self.op_norm,
                    "relaxation_c": self.relaxation_c,
                    "termination": trace.termination.to_string(),
                    "iterations": trace.iterations,
                    "iterations_to_tol": reached(trace),
                }),
            )
        };
        let summary = merge(
            base_metadata(cfg, "deconv"),
            json!({
                "mode": "compare",
                "alpha": self.alpha,
                "op_norm": self.op_norm,
                "mu": self.mu,
                "theta": self.theta,
                "v1_sigma_tau": self.v1_step,
                "relaxation_c": self.relaxation_c,
                "v3_iterations": self.v3_iterations(),
                "v1_iterations": self.v1_iterations(),
                "ratio": self.ratio(),
                "reference_iterations": self.reference_iterations,
            }),
        );
        let runs = vec![
            RunArtifact {
                name: "compare_v3".into(),
                metadata: meta("v3", &self.v3),
                reconstruction: Some(self.v3.state.x.clone()),
                records: self.v3.records,
            },
            RunArtifact {
                name: "compare_v1".into(),
                metadata: meta("v1", &self.v1),
                reconstruction: None,
                records: self.v1.records,
            },
        ];
        ExperimentOutput {
            runs,
            tables: Vec::new(),
            summary: Some(("compare".into(), summary)),
        }
    }
}

pub fn compare(
    cfg: &ExperimentConfig,
    cache: Option<&ReferenceCache>,
) -> HarnessResult<CompareSummary> {
    let d = &cfg.deconv;
    let cc = &d.compare;
    let setup = setup(d)?;
    let y_obs = noisy_data(&setup, d, cfg.seed, 0)?;
    let ratio = setup.norm_l2 / d.full_scale_norm;
    let alpha = cc.alpha_label * ratio * ratio;
    let (rows, cols) = setup.op.matrix().dim();
    let problem = SaddleProblem::new(
        setup.op.clone(),
        PrimalFn::half_square(alpha)?,
        DataFn::quadratic(y_obs),
        Space::lr(cc.r, cols)?,
        Space::hilbert(rows),
    )?;
    let norm = op_norm(&setup.op, cc.r)?.norm;
    let c = relaxation(d, cc.r);
    let (x0, p0) = start(&problem)?;

    let ref_step = (d.reference.step_safety * c).sqrt() / norm;
    let settings = ReferenceSettings {
        sigma: ref_step,
        tau: ref_step,
        op_norm: norm,
        relaxation: c,
        budget: d.reference.budget,
        stagnation_tol: d.reference.stagnation_tol,
    };
    let key = cache_key(cfg, "deconv_compare", 0, &settings)?;
    let cache = cache.filter(|_| d.reference.use_cache);
    let reference = reference_minimizer(
        &problem,
        x0.clone(),
        p0.clone(),
        &settings,
        cache.map(|c| (c, key.as_str())),
    )?;

    let (gamma, delta) = (alpha, 1.0);
    let mu = cc.mu_constant * (gamma * delta).sqrt() / (2.0 * norm);
    let theta = 1.0 / (1.0 + mu);
    let mut options = SolverOptions::new(
        Schedule::Constant {
            sigma: 1.0,
            tau: 1.0,
        },
        norm,
    );
    options.relaxation = c;
    options.max_iters = cc.max_iters;
    options.stagnation_tol = 0.0;
    options.record_every = cfg.record_every;
    options.reference = Some(Reference {
        x: reference.x.clone(),
        tol: Some(cc.tol),
    });
    let v3 = run_v3(
        &problem,
        x0.clone(),
        p0.clone(),
        gamma,
        delta,
        mu,
        theta,
        options.clone(),
    )?;
    let v1_step = (d.step_safety * c).sqrt() / norm;
    let v1 = run_v1(&problem, x0, p0, v1_step, v1_step, options)?;
    Ok(CompareSummary {
        alpha,
        op_norm: norm,
        mu,
        theta,
        v1_step,
        relaxation_c: c,
        v3,
        v1,
        reference_iterations: reference.iterations,
    })
}
