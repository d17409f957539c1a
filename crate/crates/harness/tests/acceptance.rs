//! Acceptance suite. Prints one PASS/FAIL line per criterion with the
//! tolerances and runtime budgets used, and exits non-zero on any failure.
//!
//! Optional arguments filter criteria by number or name fragment.

use std::sync::Arc;
use std::time::{Duration, Instant};

use banach_pd::operators::{
    convolution_operator, fresnel_propagate, power_method, FresnelConfig, FresnelPropagator,
    PhaseForward, PowerMethodOptions,
};
use banach_pd::oracle::argmin_oracle;
use banach_pd::resolvents::kl_inner;
use banach_pd::solver::{lyapunov, GapBox, IterState, SaddlePoint, Schedule};
use banach_pd::spaces::conjugate_exponent;
use banach_pd::{
    solve, DataFn, DenseOperator, LinearOperator, NonlinearOperator, PrimalFn, SaddleProblem,
    SolverOptions, Space,
};
use banach_pd_harness::config::ExperimentConfig;
use banach_pd_harness::experiments::{deconv, phase};
use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView1};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    check: fn() -> Outcome,
}

// ---------------------------------------------------------------------------
// Independent reference formulas

fn naive_norm(x: ArrayView1<f64>, w: ArrayView1<f64>, r: f64) -> f64 {
    x.iter()
        .zip(w.iter())
        .map(|(v, w)| w * v.abs().powf(r))
        .sum::<f64>()
        .powf(1.0 / r)
}

/// Norm of the dual of `l^r_W`: exponent `r*`, weights `w^{1 - r*}`.
fn naive_dual_norm(xs: ArrayView1<f64>, w: ArrayView1<f64>, r: f64) -> f64 {
    let rs = r / (r - 1.0);
    xs.iter()
        .zip(w.iter())
        .map(|(v, w)| w.powf(1.0 - rs) * v.abs().powf(rs))
        .sum::<f64>()
        .powf(1.0 / rs)
}

fn dot(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn max_abs(v: &Array1<f64>) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn max_diff(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    max_abs(&(a - b))
}

/// Unweighted `J` of `(1/2)||.||_q^2`.
fn naive_j(v: &Array1<f64>, q: f64) -> Array1<f64> {
    let n = v.iter().map(|x| x.abs().powf(q)).sum::<f64>().powf(1.0 / q);
    if n == 0.0 {
        return Array1::zeros(v.len());
    }
    v.mapv(|x| x.signum() * x.abs().powf(q - 1.0) * n.powf(2.0 - q))
}

fn normal(rng: &mut ChaCha8Rng, n: usize) -> Array1<f64> {
    Array1::from_iter((0..n).map(|_| StandardNormal.sample(rng)))
}

fn weights(rng: &mut ChaCha8Rng, n: usize) -> Array1<f64> {
    Array1::from_iter((0..n).map(|_| rng.random_range(0.25..4.0)))
}

fn spectral_norm(m: &Array2<f64>) -> f64 {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[[i, j]])
        .singular_values()
        .max()
}

// ---------------------------------------------------------------------------
// 1. Duality mappings

fn c1_duality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let exps = [1.1, 1.25, 1.5, 2.0];
    let dims = [4, 64, 1024];
    let per = 10_000usize.div_ceil(exps.len() * dims.len());
    let (mut pair, mut dual, mut round) = (0.0_f64, 0.0_f64, 0.0_f64);
    let mut count = 0;
    for &r in &exps {
        for &n in &dims {
            for _ in 0..per {
                let w = weights(&mut rng, n);
                let s = Space::weighted_lr(r, w.clone()).map_err(|e| e.to_string())?;
                let scale = 10f64.powf(rng.random_range(-3.0..3.0));
                let x = normal(&mut rng, n) * scale;
                let jx = s.j(x.view()).map_err(|e| e.to_string())?;
                let nx = naive_norm(x.view(), w.view(), r);
                pair = pair.max((dot(x.view(), jx.view()) - nx * nx).abs() / (nx * nx));
                dual = dual.max((naive_dual_norm(jx.view(), w.view(), r) - nx).abs() / nx);
                let back = s.dual().j(jx.view()).map_err(|e| e.to_string())?;
                round = round.max(max_diff(&back, &x) / max_abs(&x));
                count += 1;
            }
        }
    }
    let tol = 1e-10;
    let detail = format!(
        "{count} vectors; pairing {pair:.2e}, dual norm {dual:.2e}, round trip {round:.2e} (relative, tol {tol:.0e})"
    );
    if pair <= tol && dual <= tol && round <= tol {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------------------
// 2. Bregman distances

fn c2_bregman() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let n = 16;
    let samples = 10_000;
    let (mut sym, mut three) = (0.0_f64, 0.0_f64);
    let mut violations = Vec::new();
    for r in [1.1, 1.25, 1.5, 2.0] {
        let c = 0.99 * (r - 1.0);
        let mut bad = 0;
        for _ in 0..samples {
            let w = weights(&mut rng, n);
            let s = Space::weighted_lr(r, w.clone()).map_err(|e| e.to_string())?;
            let sd = s.dual();
            let (u, x, z) = (
                normal(&mut rng, n),
                normal(&mut rng, n),
                normal(&mut rng, n),
            );
            let ju = s.j(u.view()).map_err(|e| e.to_string())?;
            let jx = s.j(x.view()).map_err(|e| e.to_string())?;
            let jz = s.j(z.view()).map_err(|e| e.to_string())?;
            let nu = naive_norm(u.view(), w.view(), r);
            let nx = naive_norm(x.view(), w.view(), r);
            let nz = naive_norm(z.view(), w.view(), r);
            let scale = 0.5 * (nu * nu + nx * nx + nz * nz);
            let b_ux = s.bregman(u.view(), x.view()).map_err(|e| e.to_string())?;
            // Independent expansion of the definition.
            let direct = 0.5 * nu * nu - 0.5 * nx * nx - dot((&u - &x).view(), jx.view());
            let b_dual = sd
                .bregman(jx.view(), ju.view())
                .map_err(|e| e.to_string())?;
            sym = sym
                .max((b_ux - b_dual).abs() / scale)
                .max((b_ux - direct).abs() / scale);
            let b_uz = s.bregman(u.view(), z.view()).map_err(|e| e.to_string())?;
            let b_zx = s.bregman(z.view(), x.view()).map_err(|e| e.to_string())?;
            let cross = dot((&u - &z).view(), (&jz - &jx).view());
            three = three.max((b_ux - b_uz - b_zx - cross).abs() / scale);
            let d = naive_norm((&u - &x).view(), w.view(), r);
            if b_ux < 0.5 * c * d * d {
                bad += 1;
            }
        }
        violations.push((r, bad));
    }
    let tol = 1e-10;
    let total_bad: usize = violations.iter().map(|v| v.1).sum();
    let detail = format!(
        "{samples} triples per space; dual symmetry {sym:.2e}, three-point {three:.2e} (relative, tol {tol:.0e}); \
         lower-bound violations {violations:?}"
    );
    if sym <= tol && three <= tol && total_bad == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------------------
// 3. Resolvents against the argmin oracle

fn random_space(rng: &mut ChaCha8Rng, n: usize) -> (Space, Array1<f64>, f64) {
    let r = [1.25, 1.5, 2.0][rng.random_range(0..3)];
    let w = weights(rng, n);
    (Space::weighted_lr(r, w.clone()).expect("valid space"), w, r)
}

/// Conjugate of `y -> S(y + b)`, worked out by hand per coordinate.
fn kl_conjugate_value(obs: &Array1<f64>, shift: &Array1<f64>, p: ArrayView1<f64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..p.len() {
        let (o, b, q) = (obs[j], shift[j], p[j]);
        let v = if o > 0.0 {
            if q >= 1.0 {
                return f64::INFINITY;
            }
            o * (o / (1.0 - q)).ln() - o
        } else if q > 1.0 {
            return f64::INFINITY;
        } else {
            0.0
        };
        acc += v - b * q;
    }
    acc
}

fn c3_resolvents() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let cases = 50;
    let tol = 1e-6;
    let mut report = Vec::new();
    let mut ok = true;
    let mut record = |name: &str, worst: f64| {
        ok &= worst <= tol;
        report.push(format!("{name} {worst:.1e}"));
    };
    let err = |e: banach_pd::Error| e.to_string();

    for r in [1.5, 2.0, 3.0] {
        let mut worst = 0.0_f64;
        for _ in 0..cases {
            let n = rng.random_range(1..=8);
            let (s, w, p) = random_space(&mut rng, n);
            let scale = rng.random_range(0.2..3.0);
            let tau = rng.random_range(0.1..3.0);
            let xs = normal(&mut rng, n);
            let fast = PrimalFn::power_norm(r, scale)
                .map_err(err)?
                .resolve(&s, tau, xs.view())
                .map_err(err)?;
            let h = |v: ArrayView1<f64>| scale / r * naive_norm(v, w.view(), p).powf(r);
            let slow = argmin_oracle(&s, h, tau, xs.view(), None).map_err(err)?;
            worst = worst.max(max_diff(&fast, &slow));
        }
        record(&format!("power r={r}"), worst);
    }

    let mut worst = 0.0_f64;
    for _ in 0..cases {
        let n = rng.random_range(1..=8);
        let (s, _, _) = random_space(&mut rng, n);
        let scale = rng.random_range(0.2..2.0);
        let tau = rng.random_range(0.1..2.0);
        let xs = normal(&mut rng, n);
        let fast = PrimalFn::l1(scale)
            .map_err(err)?
            .resolve(&s, tau, xs.view())
            .map_err(err)?;
        let h = |v: ArrayView1<f64>| scale * v.iter().map(|a| a.abs()).sum::<f64>();
        let slow = argmin_oracle(&s, h, tau, xs.view(), None).map_err(err)?;
        worst = worst.max(max_diff(&fast, &slow));
    }
    record("l1", worst);

    let mut worst = 0.0_f64;
    for _ in 0..cases {
        let n = rng.random_range(1..=8);
        let (s, _, _) = random_space(&mut rng, n);
        let a = normal(&mut rng, n);
        let b = normal(&mut rng, n);
        let lower = Array1::from_iter(a.iter().zip(&b).map(|(a, b)| a.min(*b)));
        let upper = Array1::from_iter(a.iter().zip(&b).map(|(a, b)| a.max(*b) + 0.1));
        let xs = normal(&mut rng, n);
        let fast = PrimalFn::boxed(lower.clone(), upper.clone())
            .map_err(err)?
            .resolve(&s, 1.0, xs.view())
            .map_err(err)?;
        let slow = argmin_oracle(
            &s,
            |_| 0.0,
            1.0,
            xs.view(),
            Some((lower.view(), upper.view())),
        )
        .map_err(err)?;
        worst = worst.max(max_diff(&fast, &slow));
    }
    record("box", worst);

    let mut worst = 0.0_f64;
    for _ in 0..cases {
        let n = rng.random_range(1..=8);
        let (y_space, w, r) = random_space(&mut rng, n);
        let y0 = normal(&mut rng, n);
        let sigma = rng.random_range(0.1..3.0);
        let y = normal(&mut rng, n);
        let fast = DataFn::quadratic(y0.clone())
            .resolve(&y_space, sigma, y.view())
            .map_err(err)?;
        let gstar =
            |p: ArrayView1<f64>| 0.5 * naive_dual_norm(p, w.view(), r).powi(2) + dot(y0.view(), p);
        let slow = argmin_oracle(&y_space.dual(), gstar, sigma, y.view(), None).map_err(err)?;
        worst = worst.max(max_diff(&fast, &slow));
    }
    record("quadratic data", worst);

    let mut worst = 0.0_f64;
    for _ in 0..cases {
        let n = rng.random_range(1..=8);
        let w = weights(&mut rng, n);
        let obs = Array1::from_iter((0..n).map(|_| {
            if rng.random_bool(0.2) {
                0.0
            } else {
                rng.random_range(0.0..4.0)
            }
        }));
        let sigma = rng.random_range(0.1..2.0);
        let y = normal(&mut rng, n);
        let fast = kl_inner(sigma, obs.view(), w.view(), y.view()).map_err(err)?;
        // Solves (1 - obs/z)/w + sigma z = y, the stationarity condition of
        // sum_j S_j(z_j)/w_j + sigma ||z||^2/2 - <y, z> over z >= 0.
        let h = |v: ArrayView1<f64>| {
            let mut acc = 0.0;
            for j in 0..n {
                let z = v[j];
                if z < 0.0 || (z == 0.0 && obs[j] > 0.0) {
                    return f64::INFINITY;
                }
                let s = if obs[j] > 0.0 { z - obs[j] * z.ln() } else { z };
                acc += s / w[j];
            }
            acc
        };
        let input = &y / sigma;
        let lo = Array1::zeros(n);
        let hi = Array1::from_elem(n, f64::INFINITY);
        let slow = argmin_oracle(
            &Space::hilbert(n),
            h,
            1.0 / sigma,
            input.view(),
            Some((lo.view(), hi.view())),
        )
        .map_err(err)?;
        worst = worst.max(max_diff(&fast, &slow));
    }
    record("KL inner", worst);

    let mut worst = 0.0_f64;
    for _ in 0..cases {
        let n = rng.random_range(1..=8);
        let w = weights(&mut rng, n);
        let space = Space::weighted_lr(2.0, w.clone()).map_err(err)?;
        let obs = Array1::from_iter((0..n).map(|_| {
            if rng.random_bool(0.2) {
                0.0
            } else {
                rng.random_range(0.1..4.0)
            }
        }));
        let shift = normal(&mut rng, n) * 0.3;
        let g = DataFn::kl_poisson(obs.clone(), Some(shift.clone())).map_err(err)?;
        let sigma = rng.random_range(0.1..2.0);
        let y = normal(&mut rng, n);
        let fast = g.resolve(&space, sigma, y.view()).map_err(err)?;
        let h = |p: ArrayView1<f64>| kl_conjugate_value(&obs, &shift, p);
        let slow = argmin_oracle(&space.dual(), h, sigma, y.view(), None).map_err(err)?;
        worst = worst.max(max_diff(&fast, &slow));
    }
    record("KL conjugate (Moreau)", worst);

    let detail = format!(
        "{cases} cases each, max-abs tol {tol:.0e}: {}",
        report.join(", ")
    );
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------------------
// 4. Hilbert regression

fn c4_hilbert() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let n = 8;
    let a = Array2::from_shape_fn((n, n), |_| StandardNormal.sample(&mut rng));
    let y = normal(&mut rng, n);
    let lambda = 0.5;
    let l = spectral_norm(&a);
    let (sigma, tau) = (0.9 / l, 0.9 / l);
    let problem = SaddleProblem::new(
        Arc::new(DenseOperator::new(a.clone())),
        PrimalFn::l1(lambda).map_err(|e| e.to_string())?,
        DataFn::quadratic(y.clone()),
        Space::hilbert(n),
        Space::hilbert(n),
    )
    .map_err(|e| e.to_string())?;
    let mut state =
        IterState::new(&problem, Array1::zeros(n), Array1::zeros(n)).map_err(|e| e.to_string())?;
    // Classical iteration: prox of sigma g*, then soft thresholding.
    let mut x = Array1::<f64>::zeros(n);
    let mut p = Array1::<f64>::zeros(n);
    let mut xbar = x.clone();
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        state = banach_pd::solver::cp_bs_step(&problem, &state, sigma, tau, 1.0)
            .map_err(|e| e.to_string())?;
        let v = &p + &(a.dot(&xbar) * sigma);
        p = (v - &y * sigma) / (1.0 + sigma);
        let u = &x - &(a.t().dot(&p) * tau);
        let xn = u.mapv(|t| t.signum() * (t.abs() - tau * lambda).max(0.0));
        xbar = &xn * 2.0 - &x;
        x = xn;
        let scale = 1.0_f64.max(max_abs(&x)).max(max_abs(&p));
        worst = worst
            .max(max_diff(&state.x, &x) / scale)
            .max(max_diff(&state.p, &p) / scale);
    }
    let detail = format!("100 iterations, max deviation {worst:.2e} (tol 1e-14)");
    if worst <= 1e-14 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------------------
// Problems with known saddle points for the rate criteria

struct Known {
    label: &'static str,
    problem: SaddleProblem,
    saddle: SaddlePoint,
    /// Upper bound of `||T||_{X -> Y}`.
    op_norm: f64,
    /// `C_X C_{Y*}`.
    c: f64,
    x_exp: f64,
    y_exp: f64,
}

fn scalar_known() -> Result<Known, String> {
    let problem = SaddleProblem::new(
        Arc::new(DenseOperator::identity(1)),
        PrimalFn::half_square(1.0).map_err(|e| e.to_string())?,
        DataFn::quadratic(Array1::from(vec![1.0])),
        Space::hilbert(1),
        Space::hilbert(1),
    )
    .map_err(|e| e.to_string())?;
    Ok(Known {
        label: "scalar",
        problem,
        saddle: SaddlePoint {
            x: Array1::from(vec![0.5]),
            p: Array1::from(vec![-0.5]),
        },
        op_norm: 1.0,
        c: 1.0,
        x_exp: 2.0,
        y_exp: 2.0,
    })
}

/// `min (1/2)||x||_{1.5}^2 + (1/2)||T x - y0||_2^2` in 16 dimensions. The
/// saddle point comes from gradient descent on the smooth dual
/// `D(p) = (1/2)||T* p||_3^2 + (1/2)||p||^2 + <y0, p>`, then
/// `xbar = J_3(-T* pbar)`.
fn banach_known() -> Result<Known, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let n = 16;
    let r = 1.5;
    let rs = conjugate_exponent(r);
    let t = Array2::from_shape_fn((n, n), |_| {
        let v: f64 = StandardNormal.sample(&mut rng);
        v / 4.0
    });
    let y0 = normal(&mut rng, n);
    let l2 = spectral_norm(&t);
    let lip = 1.0 + (rs - 1.0) * l2 * l2;
    let grad = |p: &Array1<f64>| -> Array1<f64> {
        let xi = -t.t().dot(p);
        -t.dot(&naive_j(&xi, rs)) + p + &y0
    };
    let mut p = Array1::<f64>::zeros(n);
    let mut g = grad(&p);
    for _ in 0..200_000 {
        let next = &p - &(&g / lip);
        let gn = grad(&next);
        let stalled = max_diff(&next, &p) == 0.0;
        p = next;
        g = gn;
        if stalled || max_abs(&g) <= 1e-15 {
            break;
        }
    }
    if max_abs(&g) > 1e-13 {
        return Err(format!(
            "dual oracle did not converge, gradient {:.2e}",
            max_abs(&g)
        ));
    }
    let x = naive_j(&(-t.t().dot(&p)), rs);
    // Primal optimality: J_{1.5}(x) + T*(T x - y0) = 0.
    let kkt = naive_j(&x, r) + t.t().dot(&(t.dot(&x) - &y0));
    if max_abs(&kkt) > 1e-12 {
        return Err(format!("saddle residual {:.2e}", max_abs(&kkt)));
    }
    let problem = SaddleProblem::new(
        Arc::new(DenseOperator::new(t)),
        PrimalFn::half_square(1.0).map_err(|e| e.to_string())?,
        DataFn::quadratic(y0),
        Space::lr(r, n).map_err(|e| e.to_string())?,
        Space::hilbert(n),
    )
    .map_err(|e| e.to_string())?;
    // ||x||_2 <= ||x||_1.5, so the spectral norm bounds the l^1.5 -> l^2 norm.
    Ok(Known {
        label: "l^1.5 16-dim",
        problem,
        saddle: SaddlePoint { x, p },
        op_norm: l2,
        c: 0.99 * (r - 1.0),
        x_exp: r,
        y_exp: 2.0,
    })
}

fn known_problems() -> Result<Vec<Known>, String> {
    Ok(vec![scalar_known()?, banach_known()?])
}

/// `sup` of `B(u, 0) = ||u||^2 / 2` over the cube `[-rad, rad]^n` in `l^r`.
fn cube_sup_from_origin(n: usize, rad: f64, r: f64) -> f64 {
    0.5 * rad * rad * (n as f64).powf(2.0 / r)
}

fn options_for(k: &Known, schedule: Schedule, iters: usize) -> SolverOptions {
    let mut o = SolverOptions::new(schedule, k.op_norm);
    o.relaxation = k.c;
    o.max_iters = iters;
    o.stagnation_tol = 0.0;
    o.saddle = Some(k.saddle.clone());
    o.divergence_factor = f64::INFINITY;
    o
}

// ---------------------------------------------------------------------------
// 5. Constant steps: misfit bound and ergodic gap

fn c5_constant_steps() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    let iters = 10_000;
    for k in known_problems()? {
        let (nx, ny) = (k.problem.x_space.dim(), k.problem.y_space.dim());
        for (ratio, fill) in [(1.0, 0.9), (4.0, 0.5)] {
            // sigma tau ||T||^2 = fill C with sigma / tau = ratio.
            let prod = fill * k.c / (k.op_norm * k.op_norm);
            let tau = (prod / ratio).sqrt();
            let sigma = prod / tau;
            let mut o = options_for(&k, Schedule::Constant { sigma, tau }, iters);
            let rad = 1.0 + 2.0 * max_abs(&k.saddle.x).max(max_abs(&k.saddle.p));
            o.gap_box = Some(GapBox::cube(nx, ny, rad));
            let trace = solve(&k.problem, Array1::zeros(nx), Array1::zeros(ny), &o)
                .map_err(|e| e.to_string())?;
            let delta0 = trace.records[0].misfit.ok_or("missing misfit")?;
            let factor = 1.0 / (1.0 - k.op_norm * k.op_norm * sigma * tau / k.c);
            let bound = factor * delta0;
            let worst_misfit = trace
                .records
                .iter()
                .filter_map(|r| r.misfit)
                .fold(0.0_f64, f64::max);
            let sup0 = cube_sup_from_origin(nx, rad, k.x_exp) / tau
                + cube_sup_from_origin(ny, rad, k.y_exp) / sigma;
            let mut gap_ratio = 0.0_f64;
            let mut gaps = 0;
            for rec in trace.records.iter().skip(1) {
                let gap = rec.gap.ok_or("missing gap")?;
                gap_ratio = gap_ratio.max(gap * rec.k as f64 / sup0);
                gaps += 1;
            }
            let pass = worst_misfit <= bound && gap_ratio <= 1.0 && gaps == iters;
            ok &= pass;
            lines.push(format!(
                "{} sigma/tau={ratio}: max misfit/bound {:.3}, max N*gap/sup {:.3e}",
                k.label,
                worst_misfit / bound,
                gap_ratio
            ));
        }
    }
    let detail = format!("N <= {iters}; {}", lines.join("; "));
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------------------
// 6. Accelerated schedule rate

fn c6_accelerated() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    let iters = 10_000;
    let gamma = 1.0;
    for k in known_problems()? {
        let (nx, ny) = (k.problem.x_space.dim(), k.problem.y_space.dim());
        let tau0 = (0.9 * k.c).sqrt() / k.op_norm;
        let sigma0 = 0.9 * k.c / (k.op_norm * k.op_norm * tau0);
        let o = options_for(
            &k,
            Schedule::Accelerated {
                sigma0,
                tau0,
                gamma,
            },
            iters,
        );
        let trace = solve(&k.problem, Array1::zeros(nx), Array1::zeros(ny), &o)
            .map_err(|e| e.to_string())?;
        let first = &trace.records[0];
        let bx0 = first.bregman_x.ok_or("missing Bregman distance")?;
        let bp0 = first.bregman_p.ok_or("missing Bregman distance")?;
        let rhs =
            8.0 * (bx0 / (gamma * gamma * tau0 * tau0) + bp0 / (gamma * gamma * sigma0 * tau0));
        // N0: first N after which the bound holds through the end of the run.
        let mut n0 = 0;
        for rec in trace.records.iter().skip(1) {
            let bx = rec.bregman_x.ok_or("missing Bregman distance")?;
            let n = rec.k as f64;
            if bx * n * n > rhs {
                n0 = rec.k + 1;
            }
        }
        let product = sigma0 * tau0;
        let drift = trace
            .records
            .iter()
            .map(|r| ((r.sigma * r.tau - product) / product).abs())
            .fold(0.0_f64, f64::max);
        let pass = n0 <= 100 && drift <= 1e-14;
        ok &= pass;
        lines.push(format!(
            "{}: N0 = {n0}, tau_k sigma_k drift {drift:.1e}",
            k.label
        ));
    }
    let detail = format!(
        "N <= {iters}, N0 <= 100, product tol 1e-14; {}",
        lines.join("; ")
    );
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------------------
// 7. Linear schedule

fn c7_linear() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    let (gamma, delta) = (1.0, 1.0);
    // Stop checking once the bound is within 1e-12 of its start: below that
    // the Bregman distances sit at the rounding floor.
    let floor: f64 = 1e-12;
    for k in known_problems()? {
        let (nx, ny) = (k.problem.x_space.dim(), k.problem.y_space.dim());
        let mu = (gamma * delta * k.c).sqrt() / k.op_norm;
        for theta in [1.0 / (1.0 + mu), 1.0] {
            let omega = (1.0 + theta) / (2.0 + mu);
            let n_max = (floor.ln() / omega.ln()).floor() as usize;
            let o = options_for(
                &k,
                Schedule::Linear {
                    gamma,
                    delta,
                    mu,
                    theta,
                },
                n_max,
            );
            let trace = solve(&k.problem, Array1::zeros(nx), Array1::zeros(ny), &o)
                .map_err(|e| e.to_string())?;
            let first = &trace.records[0];
            let start = delta * first.bregman_p.ok_or("missing")?
                + gamma * first.bregman_x.ok_or("missing")?;
            let mut worst = 0.0_f64;
            let mut values = Vec::with_capacity(trace.records.len());
            for rec in &trace.records {
                let l = lyapunov(
                    omega,
                    gamma,
                    delta,
                    rec.bregman_p.ok_or("missing")?,
                    rec.bregman_x.ok_or("missing")?,
                );
                worst = worst.max(l / (omega.powi(rec.k as i32) * start));
                values.push(l);
            }
            // Measured up to the last nonzero value; an exact zero needs no rate.
            let from = 20.min(n_max);
            let end = (from..values.len())
                .rev()
                .find(|&i| values[i] > 0.0)
                .unwrap_or(from);
            let rate = if end > from && values[from] > 0.0 {
                (values[end] / values[from]).powf(1.0 / (end - from) as f64)
            } else {
                0.0
            };
            let pass = worst <= 1.0 && rate <= omega + 0.05;
            ok &= pass;
            lines.push(format!(
                "{} theta={theta:.4}: max L_N/(omega^N L_0) {worst:.3}, rate {rate:.4} vs omega {omega:.4} (N <= {n_max})",
                k.label
            ));
        }
    }
    let summary = deconv::compare(&ExperimentConfig::default(), None).map_err(|e| e.to_string())?;
    let (v3, v1) = (summary.v3_iterations(), summary.v1_iterations());
    let ratio = summary.ratio();
    ok &= ratio < 0.2;
    lines.push(format!(
        "Tikhonov l^1.5: V3 {v3:?} vs V1 {v1:?} iterations, ratio {ratio:.4} (< 0.2)"
    ));
    let detail = lines.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------------------
// 8. Iteration counts at desk scale

fn c8_iteration_counts() -> Outcome {
    let mut cfg = ExperimentConfig::default();
    cfg.deconv.table_sigmas = vec![0.0023];
    cfg.deconv.table_spaces = vec![2.0, 1.25];
    cfg.deconv.repetitions = 10;
    let d = &cfg.deconv;
    if d.n_x != 64 || d.noise_level != 0.18 || d.alpha != 5.0 || d.tol != 1e-5 {
        return Err("desk-scale defaults changed".into());
    }
    let summary = deconv::table1(&cfg, None).map_err(|e| e.to_string())?;
    let cell = |r: f64| {
        summary
            .cells
            .iter()
            .find(|c| c.space_r == r)
            .ok_or("missing cell")
    };
    let (l2, l125) = (cell(2.0)?, cell(1.25)?);
    let detail = format!(
        "sigma label 0.0023 (desk sigma {:.4}), 10 repetitions; median l^2 {} vs l^1.25 {} (means {} vs {})",
        l2.sigma, l2.median, l125.median, l2.mean, l125.mean
    );
    if l125.median < l2.median {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------------------
// 9. Operators

fn c9_operators() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let mut lines = Vec::new();
    let mut ok = true;
    let err = |e: banach_pd::Error| e.to_string();

    // Adjoints.
    let mut adj = 0.0_f64;
    let conv = convolution_operator(5.0, 64, 127).map_err(err)?;
    let forward = PhaseForward::new(FresnelConfig {
        n: 16,
        wavenumber: 1.0,
        source_distance: 10.0,
        detector_distance: 2.0,
        pixel: 1.0,
    })
    .map_err(err)?;
    let phi = normal(&mut rng, 256) * 0.3;
    let deriv = forward.derivative(phi.view()).map_err(err)?;
    let dense = DenseOperator::new(Array2::from_shape_fn((32, 48), |_| {
        StandardNormal.sample(&mut rng)
    }));
    let ops: [&dyn LinearOperator; 3] = [&conv, deriv.as_ref(), &dense];
    for op in ops {
        for _ in 0..20 {
            let x = normal(&mut rng, op.domain_dim());
            let y = normal(&mut rng, op.range_dim());
            let lhs = dot(op.apply(x.view()).map_err(err)?.view(), y.view());
            let rhs = dot(x.view(), op.adjoint(y.view()).map_err(err)?.view());
            adj = adj.max((lhs - rhs).abs() / (1.0 + lhs.abs().max(rhs.abs())));
        }
    }
    let sob = Space::sobolev(1.5, 1.0, 2, 16, 16.0 / (2.0 * std::f64::consts::PI)).map_err(err)?;
    for _ in 0..20 {
        let (u, v) = (normal(&mut rng, 256), normal(&mut rng, 256));
        let lhs = dot(
            sob.bessel_potential(1.0, u.view()).map_err(err)?.view(),
            v.view(),
        );
        let rhs = dot(
            u.view(),
            sob.bessel_potential(1.0, v.view()).map_err(err)?.view(),
        );
        adj = adj.max((lhs - rhs).abs() / (1.0 + lhs.abs()));
    }
    let prop = FresnelPropagator::new(16, 1.0, 3.0).map_err(err)?;
    let cfield = |rng: &mut ChaCha8Rng| -> Vec<Complex64> {
        (0..256)
            .map(|_| Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
            .collect()
    };
    let cdot = |a: &[Complex64], b: &[Complex64]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x * y.conj())
            .sum::<Complex64>()
    };
    for _ in 0..20 {
        let (u, v) = (cfield(&mut rng), cfield(&mut rng));
        let mut pu = u.clone();
        prop.propagate(&mut pu).map_err(err)?;
        let mut pv = v.clone();
        prop.propagate_adjoint(&mut pv).map_err(err)?;
        let lhs = cdot(&pu, &v);
        let rhs = cdot(&u, &pv);
        adj = adj.max((lhs - rhs).norm() / (1.0 + lhs.norm()));
    }
    ok &= adj <= 1e-10;
    lines.push(format!("adjoints {adj:.1e} (tol 1e-10)"));

    // Power method against SVD.
    let m = Array2::from_shape_fn((32, 48), |_| StandardNormal.sample(&mut rng));
    let svd = spectral_norm(&m);
    let est = power_method(
        &DenseOperator::new(m),
        &Space::hilbert(48),
        &Space::hilbert(32),
        PowerMethodOptions::default(),
    )
    .map_err(err)?;
    let rel = ((est.norm - svd) / svd).abs();
    ok &= rel <= 1e-6;
    lines.push(format!("power method vs SVD {rel:.1e} (tol 1e-6)"));

    // Fresnel propagator.
    let mut unit = 0.0_f64;
    let mut round = 0.0_f64;
    for c in [0.5, 3.0, 20.0] {
        for _ in 0..10 {
            let u = cfield(&mut rng);
            let pu = fresnel_propagate(16, 1.0, c, &u).map_err(err)?;
            let e0: f64 = u.iter().map(|z| z.norm_sqr()).sum();
            let e1: f64 = pu.iter().map(|z| z.norm_sqr()).sum();
            unit = unit.max((e1 - e0).abs() / e0);
            let back = fresnel_propagate(16, 1.0, -c, &pu).map_err(err)?;
            let scale = u.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
            round = round.max(
                back.iter()
                    .zip(&u)
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0_f64, f64::max)
                    / scale,
            );
        }
    }
    ok &= unit <= 1e-12 && round <= 1e-12;
    lines.push(format!(
        "Fresnel unitarity {unit:.1e}, c/-c round trip {round:.1e} (tol 1e-12)"
    ));

    // Frechet derivative by central differences.
    let mut fd = 0.0_f64;
    for _ in 0..10 {
        let x = normal(&mut rng, 256) * 0.3;
        let h = normal(&mut rng, 256);
        let d = forward
            .derivative(x.view())
            .map_err(err)?
            .apply(h.view())
            .map_err(err)?;
        let eps = 1e-5;
        let plus = forward.apply((&x + &(&h * eps)).view()).map_err(err)?;
        let minus = forward.apply((&x - &(&h * eps)).view()).map_err(err)?;
        let central = (plus - minus) / (2.0 * eps);
        let num = (&central - &d).mapv(|v| v * v).sum().sqrt();
        let den = d.mapv(|v| v * v).sum().sqrt();
        fd = fd.max(num / den);
    }
    ok &= fd <= 1e-5;
    lines.push(format!(
        "derivative vs central differences on 16x16 {fd:.1e} (tol 1e-5)"
    ));

    let detail = lines.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------------------
// 10. Newton iteration on phase retrieval

fn c10_irnm() -> Outcome {
    let cfg = ExperimentConfig::default();
    let p = &cfg.phase;
    if p.n != 64 || p.newton_steps != 2 {
        return Err("phase defaults changed".into());
    }
    let run = phase::run_irnm(&cfg).map_err(|e| e.to_string())?;
    let m = run.result.misfits();
    let decreasing = m.len() == 3 && m.windows(2).all(|w| w[1] < w[0]);
    let detail = format!(
        "64x64, 2 Newton steps, photon scale {:.0e}: KL misfits {:?}{}",
        p.photon_scale,
        m,
        run.result
            .aborted
            .as_deref()
            .map(|a| format!(", aborted: {a}"))
            .unwrap_or_default()
    );
    if decreasing {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------------------

fn main() {
    let criteria = [
        Criterion {
            id: 1,
            name: "duality-mapping identities",
            budget: Duration::from_secs(10),
            check: c1_duality,
        },
        Criterion {
            id: 2,
            name: "Bregman identities",
            budget: Duration::from_secs(10),
            check: c2_bregman,
        },
        Criterion {
            id: 3,
            name: "resolvent-oracle equivalence",
            budget: Duration::from_secs(120),
            check: c3_resolvents,
        },
        Criterion {
            id: 4,
            name: "Hilbert regression",
            budget: Duration::from_secs(1),
            check: c4_hilbert,
        },
        Criterion {
            id: 5,
            name: "constant-step bounds",
            budget: Duration::from_secs(30),
            check: c5_constant_steps,
        },
        Criterion {
            id: 6,
            name: "accelerated rate",
            budget: Duration::from_secs(30),
            check: c6_accelerated,
        },
        Criterion {
            id: 7,
            name: "linear rate",
            budget: Duration::from_secs(60),
            check: c7_linear,
        },
        Criterion {
            id: 8,
            name: "iteration-count direction",
            budget: Duration::from_secs(600),
            check: c8_iteration_counts,
        },
        Criterion {
            id: 9,
            name: "operator layer",
            budget: Duration::from_secs(60),
            check: c9_operators,
        },
        Criterion {
            id: 10,
            name: "Newton smoke run",
            budget: Duration::from_secs(300),
            check: c10_irnm,
        },
    ];
    let filters: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let selected = criteria.iter().filter(|c| {
        filters.is_empty()
            || filters
                .iter()
                .any(|f| f == &c.id.to_string() || c.name.contains(f.as_str()))
    });
    let mut failed = 0;
    let mut ran = 0;
    for c in selected {
        let start = Instant::now();
        let result = (c.check)();
        let elapsed = start.elapsed();
        let in_time = elapsed <= c.budget;
        let (passed, detail) = match result {
            Ok(d) => (in_time, d),
            Err(d) => (false, d),
        };
        ran += 1;
        if !passed {
            failed += 1;
        }
        println!(
            "{} criterion {:>2} {}: {} [{:.2} s of {} s{}]",
            if passed { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            detail,
            elapsed.as_secs_f64(),
            c.budget.as_secs(),
            if in_time { "" } else { ", over budget" }
        );
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
