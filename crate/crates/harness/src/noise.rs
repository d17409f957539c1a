//! Seeded data perturbations.

use ndarray::{Array1, ArrayView1};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::Serialize;

use crate::error::{HarnessError, HarnessResult};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum NoiseSpec {
    /// `y + level ||y||_2 xi / ||xi||_2` with standard normal `xi`.
    Gaussian { level: f64 },
    /// `Poisson(scale y) / scale`.
    Poisson { scale: f64 },
}

/// Generator for repetition `stream` of a run seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn make_noise(
    y_true: ArrayView1<f64>,
    spec: NoiseSpec,
    seed: u64,
    stream: u64,
) -> HarnessResult<Array1<f64>> {
    let mut rng = stream_rng(seed, stream);
    match spec {
        NoiseSpec::Gaussian { level } => {
            if !(level >= 0.0 && level.is_finite()) {
                return Err(HarnessError::Config(format!(
                    "noise level must be nonnegative, got {level}"
                )));
            }
            if level == 0.0 {
                return Ok(y_true.to_owned());
            }
            let xi: Array1<f64> =
                Array1::from_iter((0..y_true.len()).map(|_| StandardNormal.sample(&mut rng)));
            let scale = level * y_true.dot(&y_true).sqrt() / xi.dot(&xi).sqrt();
            Ok(&y_true + &(xi * scale))
        }
        NoiseSpec::Poisson { scale } => {
            if !(scale > 0.0 && scale.is_finite()) {
                return Err(HarnessError::Config(format!(
                    "photon scale must be positive, got {scale}"
                )));
            }
            y_true
                .iter()
                .map(|&v| {
                    if !(v >= 0.0) {
                        return Err(HarnessError::Config(format!(
                            "Poisson noise needs nonnegative intensities, got {v}"
                        )));
                    }
                    if v == 0.0 {
                        return Ok(0.0);
                    }
                    let dist = Poisson::new(scale * v).map_err(|e| {
                        HarnessError::Config(format!("Poisson rate {}: {e}", scale * v))
                    })?;
                    let count: f64 = dist.sample(&mut rng);
                    Ok(count / scale)
                })
                .collect::<HarnessResult<Vec<_>>>()
                .map(Array1::from)
        }
    }
}
