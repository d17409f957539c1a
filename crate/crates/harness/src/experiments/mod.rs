//! Experiment drivers behind the CLI subcommands.

pub mod deconv;
pub mod opnorm;
pub mod phase;
pub mod quadratic;

use serde_json::{json, Value};

use crate::config::ExperimentConfig;

pub const LIBRARY_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Fields shared by all metadata files: version, seed and the full
/// configuration with every default filled in.
pub fn base_metadata(cfg: &ExperimentConfig, experiment: &str) -> Value {
    json!({
        "library": "banach-pd",
        "library_version": LIBRARY_VERSION,
        "experiment": experiment,
        "seed": cfg.seed,
        "config": cfg,
    })
}

/// Shallow merge of the object `extra` into `base`.
pub fn merge(mut base: Value, extra: Value) -> Value {
    if let (Some(b), Value::Object(e)) = (base.as_object_mut(), extra) {
        b.extend(e);
    }
    base
}

/// Median with `None` ordered above every count.
pub fn median(counts: &[Option<usize>]) -> f64 {
    let mut v: Vec<f64> = counts
        .iter()
        .map(|c| c.map_or(f64::INFINITY, |n| n as f64))
        .collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Mean count, infinite if any run missed the target.
pub fn mean(counts: &[Option<usize>]) -> f64 {
    if counts.is_empty() {
        return f64::NAN;
    }
    let mut acc = 0.0;
    for c in counts {
        match c {
            Some(n) => acc += *n as f64,
            None => return f64::INFINITY,
        }
    }
    acc / counts.len() as f64
}
