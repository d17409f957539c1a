//! Scalar problem `min_x x^2/2 + (x - y0)^2/2` with known saddle point
//! `(y0/2, -y0/2)`.

use std::sync::Arc;

use banach_pd::solver::{GapBox, Reference, SaddlePoint, Schedule};
use banach_pd::{solve, DataFn, DenseOperator, PrimalFn, SaddleProblem, SolverOptions, Space};
use ndarray::array;
use serde_json::json;

use crate::artifacts::{ExperimentOutput, RunArtifact};
use crate::config::{ExperimentConfig, VariantName};
use crate::error::{HarnessError, HarnessResult};
use crate::experiments::{base_metadata, merge};

/// Final distance to the closed-form minimizer counted as success.
pub const TARGET_ERROR: f64 = 1e-8;

pub fn scalar_problem(y0: f64) -> HarnessResult<SaddleProblem> {
    Ok(SaddleProblem::new(
        Arc::new(DenseOperator::identity(1)),
        PrimalFn::half_square(1.0)?,
        DataFn::quadratic(array![y0]),
        Space::hilbert(1),
        Space::hilbert(1),
    )?)
}

pub fn scalar_saddle(y0: f64) -> SaddlePoint {
    SaddlePoint {
        x: array![0.5 * y0],
        p: array![-0.5 * y0],
    }
}

pub fn run(cfg: &ExperimentConfig) -> HarnessResult<ExperimentOutput> {
    let q = &cfg.quadratic;
    let problem = scalar_problem(q.y0)?;
    let op_norm = 1.0;
    let schedule = match q.variant {
        VariantName::V1 => Schedule::Constant {
            sigma: q.sigma,
            tau: q.tau,
        },
        VariantName::V2 => Schedule::Accelerated {
            sigma0: q.sigma,
            tau0: q.tau,
            gamma: q.gamma,
        },
        VariantName::V3 => {
            let mu =
                q.mu.unwrap_or((q.gamma * q.delta * q.relaxation).sqrt() / op_norm);
            Schedule::Linear {
                gamma: q.gamma,
                delta: q.delta,
                mu,
                theta: q.theta.unwrap_or(1.0 / (1.0 + mu)),
            }
        }
    };
    let saddle = scalar_saddle(q.y0);
    let mut options = SolverOptions::new(schedule, op_norm);
    options.relaxation = q.relaxation;
    options.max_iters = q.max_iters;
    options.record_every = cfg.record_every;
    options.stagnation_tol = 0.0;
    options.reference = Some(Reference {
        x: saddle.x.clone(),
        tol: None,
    });
    options.gap_box = Some(GapBox::cube(1, 1, q.gap_radius));
    options.saddle = Some(saddle.clone());
    let x0 = array![0.0];
    let p0 = array![0.0];
    let trace = solve(&problem, x0, p0, &options)?;
    let final_error = (trace.state.x[0] - saddle.x[0]).abs();
    let (sigma0, tau0) = schedule.initial_steps();
    let metadata = merge(
        base_metadata(cfg, "quadratic"),
        json!({
            "variant": banach_pd::solver::Variant::from(q.variant).to_string(),
            "op_norm": op_norm,
            "op_norm_source": "exact",
            "relaxation_c": q.relaxation,
            "sigma0": sigma0,
            "tau0": tau0,
            "termination": trace.termination.to_string(),
            "iterations": trace.iterations,
            "kkt_x": saddle.x[0],
            "final_x": trace.state.x[0],
            "final_error": final_error,
            "target_error": TARGET_ERROR,
            "converged": final_error <= TARGET_ERROR,
        }),
    );
    if !(final_error <= TARGET_ERROR) {
        eprintln!("quadratic: final error {final_error:e} above {TARGET_ERROR:e}");
    }
    let reconstruction = Some(trace.state.x.clone());
    Ok(ExperimentOutput {
        runs: vec![RunArtifact {
            name: "quadratic".into(),
            records: trace.records,
            metadata,
            reconstruction,
        }],
        tables: Vec::new(),
        summary: None,
    })
}

/// Final error of a run, read back from its metadata.
pub fn final_error(output: &ExperimentOutput) -> HarnessResult<f64> {
    output
        .runs
        .first()
        .and_then(|r| r.metadata["final_error"].as_f64())
        .ok_or_else(|| HarnessError::Config("quadratic output without final error".into()))
}
