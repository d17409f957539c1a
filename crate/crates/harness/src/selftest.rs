//! Quick invariant checks run by the `selftest` subcommand.

use std::sync::Arc;

use banach_pd::operators::{convolution_operator, FresnelPropagator};
use banach_pd::oracle::argmin_oracle;
use banach_pd::solver::cp_bs_step;
use banach_pd::spaces::pairing;
use banach_pd::{DataFn, DenseOperator, LinearOperator, PrimalFn, SaddleProblem, Space};
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::ExperimentConfig;
use crate::experiments::quadratic;
use crate::noise::{make_noise, stream_rng, NoiseSpec};

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, worst: f64, tol: f64) -> CheckOutcome {
    CheckOutcome {
        name,
        passed: worst <= tol,
        detail: format!("worst {worst:.3e}, tolerance {tol:.0e}"),
    }
}

fn normal_vec(rng: &mut impl Rng, n: usize) -> Array1<f64> {
    Array1::from_iter((0..n).map(|_| StandardNormal.sample(rng)))
}

fn weighted_space(rng: &mut impl Rng, r: f64, n: usize) -> Space {
    let w = Array1::from_iter((0..n).map(|_| rng.random_range(0.5..2.0)));
    Space::weighted_lr(r, w).expect("valid weights")
}

fn duality_identities() -> CheckOutcome {
    let mut rng = stream_rng(11, 0);
    let mut worst = 0.0_f64;
    for r in [1.1, 1.25, 1.5, 2.0] {
        for _ in 0..50 {
            let s = weighted_space(&mut rng, r, 16);
            let x = normal_vec(&mut rng, 16);
            let jx = s.j(x.view()).unwrap();
            let nx = s.norm(x.view()).unwrap();
            let back = s.dual().j(jx.view()).unwrap();
            let scale = nx * nx;
            worst = worst
                .max((pairing(x.view(), jx.view()) - scale).abs() / scale)
                .max((s.dual().norm(jx.view()).unwrap() - nx).abs() / nx)
                .max((&back - &x).iter().fold(0.0_f64, |m, v| m.max(v.abs())) / nx);
        }
    }
    outcome("duality map identities", worst, 1e-10)
}

fn three_point_identity() -> CheckOutcome {
    let mut rng = stream_rng(12, 0);
    let mut worst = 0.0_f64;
    for r in [1.25, 1.5, 2.0] {
        for _ in 0..50 {
            let s = weighted_space(&mut rng, r, 8);
            let (u, z, x) = (
                normal_vec(&mut rng, 8),
                normal_vec(&mut rng, 8),
                normal_vec(&mut rng, 8),
            );
            let lhs = s.bregman(u.view(), x.view()).unwrap();
            let jz = s.j(z.view()).unwrap();
            let jx = s.j(x.view()).unwrap();
            let cross = pairing((&u - &z).view(), (&jz - &jx).view());
            let rhs = s.bregman(u.view(), z.view()).unwrap()
                + s.bregman(z.view(), x.view()).unwrap()
                + cross;
            worst = worst.max((lhs - rhs).abs() / (1.0 + lhs.abs()));
        }
    }
    outcome("Bregman three-point identity", worst, 1e-10)
}

fn l1_resolvent_oracle() -> CheckOutcome {
    let mut rng = stream_rng(13, 0);
    let mut worst = 0.0_f64;
    let s = Space::lr(1.25, 4).unwrap();
    let f = PrimalFn::l1(1.0).unwrap();
    for _ in 0..5 {
        let input = normal_vec(&mut rng, 4);
        let tau = rng.random_range(0.1..1.0);
        let fast = f.resolve(&s, tau, input.view()).unwrap();
        let slow = argmin_oracle(
            &s,
            |v| v.iter().map(|a| a.abs()).sum(),
            tau,
            input.view(),
            None,
        )
        .unwrap();
        worst = worst.max((&fast - &slow).iter().fold(0.0_f64, |m, v| m.max(v.abs())));
    }
    outcome("l1 resolvent against argmin oracle", worst, 1e-6)
}

fn soft(v: f64, t: f64) -> f64 {
    v.signum() * (v.abs() - t).max(0.0)
}

fn hilbert_regression() -> CheckOutcome {
    let mut rng = stream_rng(14, 0);
    let n = 8;
    let a = Array2::from_shape_fn((n, n), |_| StandardNormal.sample(&mut rng)) / 4.0;
    let y = normal_vec(&mut rng, n);
    let op = DenseOperator::new(a.clone());
    let problem = SaddleProblem::new(
        Arc::new(op),
        PrimalFn::l1(0.3).unwrap(),
        DataFn::quadratic(y.clone()),
        Space::hilbert(n),
        Space::hilbert(n),
    )
    .unwrap();
    let (sigma, tau) = (0.4, 0.4);
    let mut state =
        banach_pd::solver::IterState::new(&problem, Array1::zeros(n), Array1::zeros(n)).unwrap();
    let (mut x, mut p, mut xb) = (
        Array1::<f64>::zeros(n),
        Array1::<f64>::zeros(n),
        Array1::<f64>::zeros(n),
    );
    let mut worst = 0.0_f64;
    for _ in 0..50 {
        state = cp_bs_step(&problem, &state, sigma, tau, 1.0).unwrap();
        let pin = &p + &(a.dot(&xb) * sigma);
        p = (&pin - &(&y * sigma)) / (1.0 + sigma);
        let xin = &x - &(a.t().dot(&p) * tau);
        let xn = xin.mapv(|v| soft(v, tau * 0.3));
        xb = &xn * 2.0 - &x;
        x = xn;
        worst = worst
            .max((&state.x - &x).iter().fold(0.0_f64, |m, v| m.max(v.abs())))
            .max((&state.p - &p).iter().fold(0.0_f64, |m, v| m.max(v.abs())));
    }
    outcome("Hilbert case against classical iteration", worst, 1e-14)
}

fn adjoint_test() -> CheckOutcome {
    let mut rng = stream_rng(15, 0);
    let op = convolution_operator(5.0, 32, 63).unwrap();
    let mut worst = 0.0_f64;
    for _ in 0..10 {
        let x = normal_vec(&mut rng, 32);
        let y = normal_vec(&mut rng, 63);
        let lhs = LinearOperator::apply(&op, x.view()).unwrap().dot(&y);
        let rhs = x.dot(&op.adjoint(y.view()).unwrap());
        worst = worst.max((lhs - rhs).abs() / (1.0 + lhs.abs()));
    }
    outcome("convolution adjoint", worst, 1e-10)
}

fn fresnel_unitary() -> CheckOutcome {
    let mut rng = stream_rng(16, 0);
    let prop = FresnelPropagator::new(16, 1.0, 2.5).unwrap();
    let field: Vec<Complex64> = (0..256)
        .map(|_| {
            Complex64::new(
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
            )
        })
        .collect();
    let mut out = field.clone();
    prop.propagate(&mut out).unwrap();
    let energy = |v: &[Complex64]| v.iter().map(|c| c.norm_sqr()).sum::<f64>();
    let mut worst = (energy(&out) - energy(&field)).abs() / energy(&field);
    prop.propagate_adjoint(&mut out).unwrap();
    for (a, b) in out.iter().zip(&field) {
        worst = worst.max((a - b).norm());
    }
    outcome("Fresnel propagator unitarity", worst, 1e-12)
}

fn gaussian_noise_level() -> CheckOutcome {
    let y = Array1::linspace(0.0, 1.0, 64);
    let out = make_noise(y.view(), NoiseSpec::Gaussian { level: 0.18 }, 3, 0).unwrap();
    let d = &out - &y;
    let level = (d.dot(&d) / y.dot(&y)).sqrt();
    outcome("Gaussian noise level", (level - 0.18).abs(), 1e-14)
}

fn quadratic_default() -> CheckOutcome {
    let worst = quadratic::run(&ExperimentConfig::default())
        .and_then(|o| quadratic::final_error(&o))
        .unwrap_or(f64::INFINITY);
    outcome("scalar quadratic run", worst, quadratic::TARGET_ERROR)
}

pub fn run_all() -> Vec<CheckOutcome> {
    let checks: [fn() -> CheckOutcome; 9] = [
        duality_identities,
        three_point_identity,
        l1_resolvent_oracle,
        hilbert_regression,
        adjoint_test,
        fresnel_unitary,
        gaussian_noise_level,
        quadratic_default,
        || CheckOutcome {
            name: "configuration defaults",
            passed: ExperimentConfig::default().validate().is_ok(),
            detail: String::new(),
        },
    ];
    checks.iter().map(|c| c()).collect()
}
