//! Brute-force evaluation of generalized resolvents for cross-validation.
//!
//! Minimizes `step * h(z) - <z, input> + ||z||^2 / 2` by cyclic coordinate
//! descent with golden-section line searches. Slow, derivative free, and
//! intended for small dimensions only.

use ndarray::{Array1, ArrayView1};

use crate::error::{check_dim, invalid, Error, Result};
use crate::spaces::{pairing, Space};

/// Largest dimension the oracle accepts.
pub const ORACLE_MAX_DIM: usize = 8;
const MAX_SWEEPS: usize = 20_000;
const GOLDEN: f64 = 0.618_033_988_749_894_9;

pub fn argmin_oracle<H>(
    space: &Space,
    h: H,
    step: f64,
    input: ArrayView1<f64>,
    bounds: Option<(ArrayView1<f64>, ArrayView1<f64>)>,
) -> Result<Array1<f64>>
where
    H: Fn(ArrayView1<f64>) -> f64,
{
    let n = space.dim();
    check_dim(n, input.len())?;
    if n > ORACLE_MAX_DIM {
        return Err(invalid(format!(
            "oracle dimension {n} exceeds {ORACLE_MAX_DIM}"
        )));
    }
    let (lo, hi) = match bounds {
        Some((l, u)) => {
            check_dim(n, l.len())?;
            check_dim(n, u.len())?;
            (l.to_owned(), u.to_owned())
        }
        None => (
            Array1::from_elem(n, f64::NEG_INFINITY),
            Array1::from_elem(n, f64::INFINITY),
        ),
    };
    let objective = |z: ArrayView1<f64>| -> f64 {
        let hv = h(z);
        if !hv.is_finite() {
            return f64::INFINITY;
        }
        let nz = space.norm(z).expect("dimension checked");
        step * hv - pairing(z, input) + 0.5 * nz * nz
    };
    let clip = |z: Array1<f64>| -> Array1<f64> {
        let mut z = z;
        for j in 0..n {
            z[j] = z[j].max(lo[j]).min(hi[j]);
        }
        z
    };
    // First feasible point among the unconstrained minimizer and a few
    // constant vectors.
    let mut candidates = vec![clip(space.dual().j(input)?)];
    for c in [0.0, 1.0, -1.0, 0.5, -0.5, 1e-3, -1e-3, 2.0, -2.0] {
        candidates.push(clip(Array1::from_elem(n, c)));
    }
    let Some(mut z) = candidates
        .into_iter()
        .find(|z| objective(z.view()).is_finite())
    else {
        return Err(Error::NonConvergence(
            "oracle found no feasible start".into(),
        ));
    };
    let mut best = objective(z.view());
    let mut stalled = 0;
    for _ in 0..MAX_SWEEPS {
        let mut max_move = 0.0_f64;
        let before = best;
        for j in 0..n {
            let mut trial = z.clone();
            let mut line = |t: f64| {
                trial[j] = t;
                objective(trial.view())
            };
            let (t, v) = line_minimize(&mut line, z[j], best, lo[j], hi[j]);
            if v < best {
                max_move = max_move.max((t - z[j]).abs());
                z[j] = t;
                best = v;
            }
        }
        let scale = 1.0 + z.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if max_move <= 1e-12 * scale || before - best <= 1e-16 * best.abs() {
            stalled += 1;
            if stalled >= 3 {
                return Ok(z);
            }
        } else {
            stalled = 0;
        }
    }
    Err(Error::NonConvergence(format!(
        "oracle did not settle within {MAX_SWEEPS} sweeps"
    )))
}

/// Minimize a convex scalar function near `x0` inside `[lo, hi]`.
fn line_minimize<F: FnMut(f64) -> f64>(
    f: &mut F,
    x0: f64,
    f0: f64,
    lo: f64,
    hi: f64,
) -> (f64, f64) {
    let s0 = 0.1 * (1.0 + x0.abs());
    let mut best = (x0, f0);
    // Walk outward on each side until the function stops decreasing.
    let mut walk = |dir: f64, bound: f64, best: &mut (f64, f64)| -> f64 {
        let mut s = s0;
        let mut prev = f0;
        loop {
            let x = if dir > 0.0 {
                (x0 + s).min(bound)
            } else {
                (x0 - s).max(bound)
            };
            let v = f(x);
            if v < best.1 {
                *best = (x, v);
            }
            if v >= prev || x == bound {
                return x;
            }
            prev = v;
            s *= 2.0;
            if !s.is_finite() {
                return x;
            }
        }
    };
    let right = walk(1.0, hi, &mut best);
    let left = walk(-1.0, lo, &mut best);
    let (mut a, mut b) = (left, right);
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..300 {
        if fc < best.1 {
            best = (c, fc);
        }
        if fd < best.1 {
            best = (d, fd);
        }
        if (b - a) <= 1e-15 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d);
        }
    }
    best
}
