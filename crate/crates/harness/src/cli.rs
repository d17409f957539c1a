//! Command-line interface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::artifacts::write_output;
use crate::config::{DeconvMode, ExperimentConfig, ExperimentTag, VariantName};
use crate::error::{HarnessError, HarnessResult};
use crate::experiments::{deconv, opnorm, phase, quadratic};
use crate::reference::ReferenceCache;
use crate::selftest;

#[derive(Debug, Parser)]
#[command(
    name = "banach-pd",
    version,
    about = "Primal-dual experiments in Banach spaces"
)]
pub struct Cli {
    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed of the noise generator.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spike deconvolution with an l^1 penalty.
    Deconv(DeconvArgs),
    /// Phase retrieval with the regularized Newton method.
    Phase(PhaseArgs),
    /// Scalar quadratic problem with a closed-form saddle point.
    Quadratic(QuadraticArgs),
    /// Operator norm estimates.
    Opnorm(OpnormArgs),
    /// Quick invariant checks.
    Selftest,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    V1,
    V2,
    V3,
}

impl From<VariantArg> for VariantName {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::V1 => Self::V1,
            VariantArg::V2 => Self::V2,
            VariantArg::V3 => Self::V3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Single,
    Table1,
    Sweep,
    Compare,
}

#[derive(Debug, Default, Args)]
pub struct DeconvArgs {
    /// Exponent of the primal space.
    #[arg(long)]
    pub r: Option<f64>,
    /// Dual step label on the full-scale grid.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Primal step, replacing the step rule.
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Iteration cap.
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Noise repetitions in table mode.
    #[arg(long)]
    pub reps: Option<usize>,
}

#[derive(Debug, Default, Args)]
pub struct PhaseArgs {
    /// Exponent of the Sobolev space.
    #[arg(long)]
    pub r: Option<f64>,
    /// Dual step of the inner runs.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Initial regularization parameter.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Inner iterations per Newton step.
    #[arg(long)]
    pub iters: Option<usize>,
    /// Newton steps.
    #[arg(long)]
    pub steps: Option<usize>,
}

#[derive(Debug, Default, Args)]
pub struct QuadraticArgs {
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
    #[arg(long)]
    pub iters: Option<usize>,
}

#[derive(Debug, Default, Args)]
pub struct OpnormArgs {
    /// Exponent of the deconvolution primal space.
    #[arg(long)]
    pub r: Option<f64>,
}

impl Command {
    fn tag(&self) -> Option<ExperimentTag> {
        match self {
            Self::Deconv(_) => Some(ExperimentTag::Deconv),
            Self::Phase(_) => Some(ExperimentTag::Phase),
            Self::Quadratic(_) => Some(ExperimentTag::Quadratic),
            Self::Opnorm(_) | Self::Selftest => None,
        }
    }
}

/// Configuration file (or defaults) with command-line overrides applied.
pub fn resolve_config(cli: &Cli) -> HarnessResult<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let (Some(file_tag), Some(cmd_tag)) = (cfg.experiment, cli.command.tag()) {
        if file_tag != cmd_tag && file_tag != ExperimentTag::Custom {
            return Err(HarnessError::Config(format!(
                "configuration is tagged {file_tag:?} but the {cmd_tag:?} subcommand was given"
            )));
        }
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    match &cli.command {
        Command::Deconv(a) => {
            let d = &mut cfg.deconv;
            if let Some(r) = a.r {
                d.r = r;
            }
            if let Some(s) = a.sigma {
                d.sigma_label = s;
                d.table_sigmas = vec![s];
            }
            if a.tau.is_some() {
                d.tau = a.tau;
            }
            if let Some(v) = a.variant {
                d.variant = v.into();
            }
            if let Some(alpha) = a.alpha {
                d.alpha = alpha;
            }
            if let Some(n) = a.iters {
                d.max_iters = n;
            }
            if let Some(m) = a.mode {
                d.mode = match m {
                    ModeArg::Single => DeconvMode::Single,
                    ModeArg::Table1 => DeconvMode::Table1,
                    ModeArg::Sweep => DeconvMode::Sweep,
                    ModeArg::Compare => DeconvMode::Compare,
                };
            }
            if let Some(n) = a.reps {
                d.repetitions = n;
            }
        }
        Command::Phase(a) => {
            let p = &mut cfg.phase;
            if let Some(r) = a.r {
                p.r = r;
            }
            if a.sigma.is_some() {
                p.sigma = a.sigma;
            }
            if let Some(alpha) = a.alpha {
                p.alpha0 = alpha;
            }
            if let Some(n) = a.iters {
                p.inner_iters = n;
            }
            if let Some(n) = a.steps {
                p.newton_steps = n;
            }
        }
        Command::Quadratic(a) => {
            let q = &mut cfg.quadratic;
            if let Some(s) = a.sigma {
                q.sigma = s;
            }
            if let Some(t) = a.tau {
                q.tau = t;
            }
            if let Some(v) = a.variant {
                q.variant = v.into();
            }
            if let Some(n) = a.iters {
                q.max_iters = n;
            }
        }
        Command::Opnorm(a) => {
            if let Some(r) = a.r {
                cfg.deconv.r = r;
            }
        }
        Command::Selftest => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Run the chosen subcommand. Returns the process exit code on success
/// paths; errors carry their own code.
pub fn run(cli: &Cli) -> HarnessResult<i32> {
    if let Command::Selftest = cli.command {
        let results = selftest::run_all();
        let failed = results.iter().filter(|r| !r.passed).count();
        for r in &results {
            println!(
                "{} {}: {}",
                if r.passed { "PASS" } else { "FAIL" },
                r.name,
                r.detail
            );
        }
        println!("{} passed, {failed} failed", results.len() - failed);
        return Ok(if failed == 0 { 0 } else { 3 });
    }
    let cfg = resolve_config(cli)?;
    let cache = ReferenceCache::from_env();
    let output = match &cli.command {
        Command::Deconv(_) => deconv::run(&cfg, &cache)?,
        Command::Phase(_) => phase::run(&cfg)?,
        Command::Quadratic(_) => quadratic::run(&cfg)?,
        Command::Opnorm(_) => opnorm::run(&cfg)?,
        Command::Selftest => unreachable!("handled above"),
    };
    let written = write_output(&cli.out, &output, cfg.record_timing)?;
    for path in written {
        println!("{}", path.display());
    }
    Ok(0)
}
