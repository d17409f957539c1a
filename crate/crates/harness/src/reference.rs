//! Long constant-step runs used as stand-ins for exact minimizers, with an
//! on-disk cache keyed by a hash of the configuration.

use std::path::{Path, PathBuf};

use banach_pd::solver::{run_v1, SaddleProblem, SolverOptions, Termination};
use ndarray::Array1;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, HarnessResult};

pub const CACHE_ENV: &str = "BANACH_PD_CACHE";

#[derive(Clone, Debug)]
pub struct ReferenceCache {
    dir: PathBuf,
}

impl ReferenceCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    /// `$BANACH_PD_CACHE`, else a directory under the system temp dir.
    pub fn from_env() -> Self {
        match std::env::var_os(CACHE_ENV) {
            Some(d) if !d.is_empty() => Self::new(d),
            _ => Self::new(std::env::temp_dir().join("banach-pd-cache")),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Hex SHA-256 of the JSON encoding of `payload`.
    pub fn key<T: Serialize>(payload: &T) -> HarnessResult<String> {
        let bytes = serde_json::to_vec(payload)?;
        Ok(hex::encode(Sha256::digest(&bytes)))
    }

    pub fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("ref-{key}.f64"))
    }

    /// Cached vector of length `dim`, if present and well formed.
    pub fn load(&self, key: &str, dim: usize) -> HarnessResult<Option<Array1<f64>>> {
        let bytes = match std::fs::read(self.path(key)) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        if bytes.len() != 8 * dim {
            return Ok(None);
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect::<Vec<_>>();
        Ok(Some(Array1::from(values)))
    }

    pub fn store(&self, key: &str, x: &Array1<f64>) -> HarnessResult<()> {
        std::fs::create_dir_all(&self.dir)?;
        let bytes: Vec<u8> = x.iter().flat_map(|v| v.to_le_bytes()).collect();
        let target = self.path(key);
        // Rename into place so concurrent readers never see a partial file.
        let tmp = self
            .dir
            .join(format!("ref-{key}.{}.tmp", std::process::id()));
        std::fs::write(&tmp, bytes)?;
        std::fs::rename(&tmp, &target)?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReferenceSettings {
    pub sigma: f64,
    pub tau: f64,
    pub op_norm: f64,
    pub relaxation: f64,
    pub budget: usize,
    pub stagnation_tol: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceOutcome {
    pub x: Array1<f64>,
    /// Iterations of the long run; zero when read from the cache.
    pub iterations: usize,
    pub from_cache: bool,
}

/// Run constant steps until both iterates stagnate. A run that exhausts the
/// budget is an error and leaves the cache untouched.
pub fn reference_minimizer(
    problem: &SaddleProblem,
    x0: Array1<f64>,
    p0: Array1<f64>,
    settings: &ReferenceSettings,
    cache: Option<(&ReferenceCache, &str)>,
) -> HarnessResult<ReferenceOutcome> {
    let dim = problem.x_space.dim();
    if let Some((c, key)) = cache {
        if let Some(x) = c.load(key, dim)? {
            return Ok(ReferenceOutcome {
                x,
                iterations: 0,
                from_cache: true,
            });
        }
    }
    let mut options = SolverOptions::new(
        banach_pd::Schedule::Constant {
            sigma: settings.sigma,
            tau: settings.tau,
        },
        settings.op_norm,
    );
    options.relaxation = settings.relaxation;
    options.max_iters = settings.budget;
    options.stagnation_tol = settings.stagnation_tol;
    options.record_every = settings.budget.max(1);
    let trace = run_v1(problem, x0, p0, settings.sigma, settings.tau, options)?;
    if trace.termination != Termination::Stagnated {
        return Err(HarnessError::Reference(format!(
            "no stagnation to {:e} within {} iterations",
            settings.stagnation_tol, settings.budget
        )));
    }
    let x = trace.state.x;
    if let Some((c, key)) = cache {
        c.store(key, &x)?;
    }
    Ok(ReferenceOutcome {
        x,
        iterations: trace.iterations,
        from_cache: false,
    })
}
