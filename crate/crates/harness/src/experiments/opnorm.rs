//! Operator norm estimates for the experiment operators.

use banach_pd::operators::{power_method, NormEstimate, PhaseForward, PowerMethodOptions};
use banach_pd::{NonlinearOperator, Space};
use ndarray::Array1;
use serde_json::{json, Value};

use crate::artifacts::ExperimentOutput;
use crate::config::ExperimentConfig;
use crate::error::HarnessResult;
use crate::experiments::{base_metadata, deconv, merge, phase};

fn estimate_json(label: &str, e: &NormEstimate) -> Value {
    json!({
        "operator": label,
        "norm": e.norm,
        "iterations": e.iterations,
        "converged": e.converged,
        "monotone": e.monotone,
        "restarts": e.restarts,
    })
}

pub fn run(cfg: &ExperimentConfig) -> HarnessResult<ExperimentOutput> {
    let d = &cfg.deconv;
    let setup = deconv::setup(d)?;
    let mut estimates = Vec::new();
    let mut exponents = vec![2.0, d.r, d.compare.r];
    exponents.extend(d.table_spaces.iter().copied());
    exponents.sort_by(f64::total_cmp);
    exponents.dedup();
    for r in exponents {
        let e = deconv::op_norm(&setup.op, r)?;
        estimates.push(estimate_json(&format!("convolution l^{r} -> l^2"), &e));
    }

    // Derivative of the phase map at zero phase, into the data space weighted
    // by the first Newton step.
    let p = &cfg.phase;
    let forward = PhaseForward::new(phase::fresnel_config(p))?;
    let zero = Array1::zeros(p.n * p.n);
    let y0 = forward.apply(zero.view())?;
    let y_space = Space::weighted_lr(2.0, y0.mapv(|v| 1.0 / (v + p.weight_offset)))?;
    let deriv = forward.derivative(zero.view())?;
    let e = power_method(
        deriv.as_ref(),
        &phase::primal_space(p)?,
        &y_space,
        PowerMethodOptions::default(),
    )?;
    estimates.push(estimate_json(
        &format!(
            "phase derivative at 0, H^{{{},{}}} -> weighted l^2",
            p.s, p.r
        ),
        &e,
    ));

    let summary = merge(
        base_metadata(cfg, "opnorm"),
        json!({ "full_scale_norm": d.full_scale_norm, "estimates": estimates }),
    );
    Ok(ExperimentOutput {
        runs: Vec::new(),
        tables: Vec::new(),
        summary: Some(("opnorm".into(), summary)),
    })
}
