//! Near-field phase retrieval from Poisson data with the regularized Newton
//! method in a Sobolev space.

use std::f64::consts::PI;

use banach_pd::irnm::{NoiseModel, Penalty};
use banach_pd::operators::{FresnelConfig, PhaseForward};
use banach_pd::{irnm_run, IrnmResult, IrnmSpec, NonlinearOperator, Space};
use ndarray::Array1;
use serde_json::json;

use crate::artifacts::{fmt_f64, ExperimentOutput, RunArtifact, Table};
use crate::config::{ExperimentConfig, PenaltyName, PhaseConfig};
use crate::error::HarnessResult;
use crate::experiments::{base_metadata, merge};
use crate::noise::{make_noise, NoiseSpec};

pub fn fresnel_config(p: &PhaseConfig) -> FresnelConfig {
    FresnelConfig {
        n: p.n,
        wavenumber: p.wavenumber,
        source_distance: p.source_distance,
        detector_distance: p.detector_distance,
        pixel: p.pixel,
    }
}

/// Two smooth bumps of opposite sign, peak value `amplitude`.
pub fn phantom(n: usize, amplitude: f64) -> Array1<f64> {
    let nf = n as f64;
    let bump = |i: usize, j: usize, ci: f64, cj: f64, w: f64| {
        let di = i as f64 - ci * nf;
        let dj = j as f64 - cj * nf;
        (-(di * di + dj * dj) / (2.0 * (w * nf).powi(2))).exp()
    };
    Array1::from_iter((0..n * n).map(|k| {
        let (i, j) = (k / n, k % n);
        amplitude * (bump(i, j, 0.4, 0.35, 0.08) - 0.6 * bump(i, j, 0.6, 0.65, 0.12))
    }))
}

pub fn sobolev_scale(p: &PhaseConfig) -> f64 {
    p.sobolev_scale.unwrap_or(p.n as f64 * p.pixel / (2.0 * PI))
}

pub fn primal_space(p: &PhaseConfig) -> HarnessResult<Space> {
    Ok(Space::sobolev(p.r, p.s, 2, p.n, sobolev_scale(p))?)
}

pub fn irnm_spec(p: &PhaseConfig) -> IrnmSpec {
    IrnmSpec {
        alpha0: p.alpha0,
        rho: p.rho,
        newton_steps: p.newton_steps,
        weight_offset: p.weight_offset,
        penalty: match p.penalty {
            PenaltyName::HalfSquare => Penalty::HalfSquare,
            PenaltyName::PowerNorm => Penalty::PowerNorm(p.r),
        },
        noise: NoiseModel::Poisson,
        sigma: p.sigma,
        relaxation: p.relaxation,
        inner_iters: p.inner_iters,
        ..IrnmSpec::default()
    }
}

#[derive(Debug)]
pub struct PhaseRun {
    pub truth: Array1<f64>,
    pub result: IrnmResult,
}

/// Simulate data from the phantom and run the Newton iteration from zero.
pub fn run_irnm(cfg: &ExperimentConfig) -> HarnessResult<PhaseRun> {
    let p = &cfg.phase;
    let forward = PhaseForward::new(fresnel_config(p))?;
    let truth = phantom(p.n, p.phantom_amplitude);
    let y_true = forward.apply(truth.view())?;
    let y_obs = make_noise(
        y_true.view(),
        NoiseSpec::Poisson {
            scale: p.photon_scale,
        },
        cfg.seed,
        0,
    )?;
    let space = primal_space(p)?;
    let x0 = Array1::zeros(p.n * p.n);
    let result = irnm_run(&forward, &space, y_obs.view(), x0, &irnm_spec(p))?;
    Ok(PhaseRun { truth, result })
}

pub fn run(cfg: &ExperimentConfig) -> HarnessResult<ExperimentOutput> {
    let p = &cfg.phase;
    let PhaseRun { truth, result } = run_irnm(cfg)?;
    let misfits = result.misfits();
    let decreasing = misfits.windows(2).all(|w| w[1] < w[0]);
    if let Some(reason) = &result.aborted {
        eprintln!("phase: Newton iteration stopped early: {reason}");
    }
    let err = {
        let d = &result.x - &truth;
        (d.dot(&d) / truth.dot(&truth)).sqrt()
    };
    let fc = fresnel_config(p);
    let mut runs = Vec::new();
    for step in &result.steps {
        runs.push(RunArtifact {
            name: format!("phase_newton{}", step.n),
            records: step.trace.records.clone(),
            metadata: merge(
                base_metadata(cfg, "phase"),
                json!({
                    "newton_step": step.n,
                    "alpha": step.alpha,
                    "op_norm": step.op_norm,
                    "relaxation_c": p.relaxation,
                    "termination": step.trace.termination.to_string(),
                    "iterations": step.trace.iterations,
                    "kl_misfit": step.misfit,
                }),
            ),
            reconstruction: None,
        });
    }
    if let Some(last) = runs.last_mut() {
        last.reconstruction = Some(result.x.clone());
    }
    let rows = misfits
        .iter()
        .enumerate()
        .map(|(n, m)| {
            let alpha = if n == 0 {
                String::new()
            } else {
                fmt_f64(result.steps[n - 1].alpha)
            };
            vec![n.to_string(), alpha, fmt_f64(*m)]
        })
        .collect();
    let summary = merge(
        base_metadata(cfg, "phase"),
        json!({
            "magnification": fc.magnification(),
            "chirp": fc.chirp(),
            "sobolev_scale": sobolev_scale(p),
            "noise": NoiseSpec::Poisson { scale: p.photon_scale },
            "kl_misfits": misfits,
            "misfit_strictly_decreasing": decreasing,
            "relative_error": err,
            "aborted": result.aborted,
            "newton_steps_completed": result.steps.len(),
        }),
    );
    Ok(ExperimentOutput {
        runs,
        tables: vec![Table {
            name: "phase_misfit".into(),
            header: ["newton_step", "alpha", "kl_misfit"]
                .map(String::from)
                .to_vec(),
            rows,
        }],
        summary: Some(("phase".into(), summary)),
    })
}
