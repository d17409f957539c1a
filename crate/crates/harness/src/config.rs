//! JSON experiment configuration.
//!
//! Every section carries defaults, so an empty object with only
//! `schema_version` is a valid configuration. Unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, HarnessResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentTag {
    Deconv,
    Phase,
    Quadratic,
    Custom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantName {
    V1,
    V2,
    V3,
}

impl From<VariantName> for banach_pd::solver::Variant {
    fn from(v: VariantName) -> Self {
        match v {
            VariantName::V1 => Self::V1,
            VariantName::V2 => Self::V2,
            VariantName::V3 => Self::V3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub experiment: Option<ExperimentTag>,
    pub seed: u64,
    /// Fill the `elapsed_s` column; off by default so output bytes only
    /// depend on the configuration.
    pub record_timing: bool,
    /// Keep every this many iterations in the CSV trace.
    pub record_every: usize,
    pub quadratic: QuadraticConfig,
    pub deconv: DeconvConfig,
    pub phase: PhaseConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            experiment: None,
            seed: 1,
            record_timing: false,
            record_every: 1,
            quadratic: QuadraticConfig::default(),
            deconv: DeconvConfig::default(),
            phase: PhaseConfig::default(),
        }
    }
}

/// Scalar problem `min_x x^2/2 + (x - y0)^2/2` with `T = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadraticConfig {
    pub y0: f64,
    pub variant: VariantName,
    pub sigma: f64,
    pub tau: f64,
    /// Modulus used by the accelerated and linear schedules.
    pub gamma: f64,
    pub delta: f64,
    /// Linear schedule; defaults to the largest admissible value.
    pub mu: Option<f64>,
    pub theta: Option<f64>,
    pub relaxation: f64,
    pub max_iters: usize,
    /// Half-width of the boxes in the partial gap.
    pub gap_radius: f64,
}

impl Default for QuadraticConfig {
    fn default() -> Self {
        Self {
            y0: 1.0,
            variant: VariantName::V1,
            sigma: 0.9,
            tau: 0.9,
            gamma: 1.0,
            delta: 1.0,
            mu: None,
            theta: None,
            relaxation: 0.96,
            max_iters: 200,
            gap_radius: 2.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeconvMode {
    /// One run with the configured space and steps.
    Single,
    /// Iteration counts over spaces, step sizes and noise seeds.
    Table1,
    /// Grid search over the primal step at fixed dual step.
    Sweep,
    /// Linear schedule against constant steps on a smooth Tikhonov problem.
    Compare,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Spike {
    pub index: usize,
    pub amplitude: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeconvConfig {
    pub mode: DeconvMode,
    /// Only constant steps apply to the non-smooth `l^1` penalty.
    pub variant: VariantName,
    pub n_x: usize,
    pub n_y: usize,
    pub decay: f64,
    pub spikes: Vec<Spike>,
    /// Relative Gaussian noise level.
    pub noise_level: f64,
    pub alpha: f64,
    /// Exponent of the primal space `l^r`.
    pub r: f64,
    /// Dual step on the full-scale grid, rescaled by the norm ratio.
    pub sigma_label: f64,
    /// Operator norm of the full-scale grid the labels refer to.
    pub full_scale_norm: f64,
    /// Explicit dual step, bypassing the label.
    pub sigma: Option<f64>,
    /// Explicit primal step, bypassing the step rule.
    pub tau: Option<f64>,
    /// `tau = step_safety C / (sigma ||T||^2)`.
    pub step_safety: f64,
    /// Constant `C` in the step rule; 1 for `l^2` and the default
    /// relaxation otherwise when absent.
    pub relaxation: Option<f64>,
    /// `l^1` distance to the reference minimizer that counts as converged.
    pub tol: f64,
    pub max_iters: usize,
    pub repetitions: usize,
    pub table_sigmas: Vec<f64>,
    pub table_spaces: Vec<f64>,
    /// Primal-step fractions of the admissible maximum in sweep mode.
    pub sweep_fractions: Vec<f64>,
    pub reference: ReferenceConfig,
    pub compare: CompareConfig,
}

impl Default for DeconvConfig {
    fn default() -> Self {
        Self {
            mode: DeconvMode::Single,
            variant: VariantName::V1,
            n_x: 64,
            n_y: 127,
            decay: 5.0,
            spikes: [(12, 1.0), (25, -0.6), (40, 0.8), (50, 1.2)]
                .into_iter()
                .map(|(index, a)| Spike {
                    index,
                    amplitude: 3000.0 * a,
                })
                .collect(),
            noise_level: 0.18,
            alpha: 5.0,
            r: 1.25,
            sigma_label: 0.0023,
            full_scale_norm: 39.4,
            sigma: None,
            tau: None,
            step_safety: 0.99,
            relaxation: None,
            tol: 1e-5,
            max_iters: 300_000,
            repetitions: 10,
            table_sigmas: vec![0.007, 0.0023, 0.00075],
            table_spaces: vec![2.0, 1.25],
            sweep_fractions: vec![0.05, 0.1, 0.2, 0.4, 0.6, 0.8, 0.99],
            reference: ReferenceConfig::default(),
            compare: CompareConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReferenceConfig {
    /// Exponent of the primal space used for the long run.
    pub r: f64,
    pub budget: usize,
    pub stagnation_tol: f64,
    /// Fraction of the admissible step product.
    pub step_safety: f64,
    pub use_cache: bool,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        Self {
            r: 1.25,
            budget: 1_000_000,
            stagnation_tol: 1e-15,
            step_safety: 0.9,
            use_cache: true,
        }
    }
}

/// `min ||T x - y||^2 / 2 + alpha ||x||_r^2 / 2` solved with the linear
/// schedule and with balanced constant steps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareConfig {
    pub r: f64,
    /// Regularization on the full-scale grid, rescaled by the squared norm ratio.
    pub alpha_label: f64,
    /// `mu = mu_constant sqrt(gamma delta) / (2 ||T||)`.
    pub mu_constant: f64,
    /// `l^1` distance to the reference that counts as converged.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            r: 1.5,
            alpha_label: 1.0,
            mu_constant: 0.98,
            tol: 1e-5,
            max_iters: 200_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyName {
    HalfSquare,
    PowerNorm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhaseConfig {
    pub n: usize,
    pub wavenumber: f64,
    pub source_distance: f64,
    pub detector_distance: f64,
    pub pixel: f64,
    /// Expected photons per detector pixel at unit intensity.
    pub photon_scale: f64,
    /// Peak phase shift of the phantom.
    pub phantom_amplitude: f64,
    /// Exponent and smoothness of the Sobolev primal space.
    pub r: f64,
    pub s: f64,
    /// Frequency scale; `n pixel / (2 pi)` when absent.
    pub sobolev_scale: Option<f64>,
    pub penalty: PenaltyName,
    pub alpha0: f64,
    pub rho: f64,
    pub newton_steps: usize,
    pub weight_offset: f64,
    pub sigma: Option<f64>,
    pub relaxation: f64,
    pub inner_iters: usize,
}

impl Default for PhaseConfig {
    fn default() -> Self {
        Self {
            n: 64,
            wavenumber: 1.0,
            source_distance: 100.0,
            detector_distance: 4.0,
            pixel: 1.0,
            photon_scale: 1e4,
            phantom_amplitude: 0.5,
            r: 1.1,
            s: 1.0,
            sobolev_scale: None,
            penalty: PenaltyName::HalfSquare,
            alpha0: 1e-3,
            rho: 0.5,
            newton_steps: 2,
            weight_offset: 0.1,
            sigma: None,
            relaxation: 0.96,
            inner_iters: 300,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> HarnessResult<Self> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> HarnessResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> HarnessResult<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.record_every == 0 {
            return bad("record_every must be at least 1".into());
        }
        let d = &self.deconv;
        if d.n_x < 2 || d.n_y < 2 {
            return bad("deconv grids need at least 2 points".into());
        }
        if let Some(s) = d.spikes.iter().find(|s| s.index >= d.n_x) {
            return bad(format!(
                "spike index {} outside the grid of {}",
                s.index, d.n_x
            ));
        }
        if !(d.noise_level >= 0.0) {
            return bad("noise_level must be nonnegative".into());
        }
        if !(d.alpha > 0.0) || !(d.tol > 0.0) {
            return bad("deconv alpha and tol must be positive".into());
        }
        for r in std::iter::once(d.r)
            .chain(d.table_spaces.iter().copied())
            .chain([d.reference.r, d.compare.r])
        {
            if !(r > 1.0 && r <= 2.0) {
                return bad(format!("space exponent {r} must lie in (1, 2]"));
            }
        }
        if d.repetitions == 0 {
            return bad("repetitions must be at least 1".into());
        }
        if d.reference.budget < 100_000 {
            return bad(format!(
                "reference budget {} is below 100000 iterations",
                d.reference.budget
            ));
        }
        if !(d.step_safety > 0.0 && d.step_safety < 1.0)
            || !(d.reference.step_safety > 0.0 && d.reference.step_safety < 1.0)
        {
            return bad("step_safety must lie in (0, 1)".into());
        }
        if d.sweep_fractions.iter().any(|f| !(*f > 0.0 && *f < 1.0)) {
            return bad("sweep fractions must lie in (0, 1)".into());
        }
        let p = &self.phase;
        if p.n < 2 || !(p.photon_scale > 0.0) {
            return bad("phase grid needs n >= 2 and a positive photon scale".into());
        }
        if !(p.r > 1.0 && p.r <= 2.0) {
            return bad(format!("phase space exponent {} must lie in (1, 2]", p.r));
        }
        Ok(())
    }
}
