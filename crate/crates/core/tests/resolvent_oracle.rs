//! Closed-form resolvents against direct minimization.

use banach_pd::oracle::argmin_oracle;
use banach_pd::resolvents::{kl_inner, moreau_gstar_resolvent};
use banach_pd::{DataFn, PrimalFn, Space};
use ndarray::{array, Array1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn max_diff(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    (a - b).iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn random(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Array1<f64> {
    Array1::from_iter((0..n).map(|_| rng.random_range(-scale..scale)))
}

#[test]
fn l1_in_l125_matches_oracle() {
    let s = Space::lr(1.25, 3).unwrap();
    let f = PrimalFn::l1(0.5).unwrap();
    let xs = array![2.0, -1.0, 0.25];
    let z = f.resolve(&s, 1.0, xs.view()).unwrap();
    let o = argmin_oracle(&s, |v| f.value(&s, v).unwrap(), 1.0, xs.view(), None).unwrap();
    assert!(max_diff(&z, &o) <= 1e-6, "{z} vs {o}");
}

#[test]
fn power_norms_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let s = Space::weighted_lr(1.5, array![0.5, 1.0, 2.0, 1.5]).unwrap();
    for r in [1.5, 2.0, 3.0] {
        let f = PrimalFn::power_norm(r, 0.8).unwrap();
        for _ in 0..5 {
            let xs = random(&mut rng, 4, 2.0);
            let tau = rng.random_range(0.1..3.0);
            let z = f.resolve(&s, tau, xs.view()).unwrap();
            let o = argmin_oracle(&s, |v| f.value(&s, v).unwrap(), tau, xs.view(), None).unwrap();
            assert!(max_diff(&z, &o) <= 1e-6, "r={r}: {z} vs {o}");
        }
    }
}

#[test]
fn kl_inner_matches_scalar_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let w = rng.random_range(0.2..3.0);
        let sigma = rng.random_range(0.1..2.0);
        let obs = rng.random_range(0.0..4.0);
        let y = rng.random_range(-3.0..3.0);
        let u = kl_inner(
            sigma,
            array![obs].view(),
            array![w].view(),
            array![y].view(),
        )
        .unwrap()[0];
        // u minimizes S(z)/sigma + w z^2 / 2 - w y z / sigma.
        let space = Space::weighted_lr(2.0, array![w]).unwrap();
        let s = |v: ndarray::ArrayView1<f64>| {
            let z = v[0];
            if z < 0.0 || (z == 0.0 && obs > 0.0) {
                f64::INFINITY
            } else if obs > 0.0 {
                z - obs * z.ln()
            } else {
                z
            }
        };
        let lo = array![0.0];
        let hi = array![f64::INFINITY];
        let o = argmin_oracle(
            &space,
            s,
            1.0 / sigma,
            array![w * y / sigma].view(),
            Some((lo.view(), hi.view())),
        )
        .unwrap();
        assert!(
            (u - o[0]).abs() <= 1e-6 * (1.0 + u.abs()),
            "{u} vs {}",
            o[0]
        );
    }
}

#[test]
fn kl_conjugate_resolvent_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let w = array![0.5, 2.0, 1.0];
    let y_space = Space::weighted_lr(2.0, w.clone()).unwrap();
    let g = DataFn::kl_poisson(array![1.5, 0.0, 3.0], Some(array![0.2, -0.1, 0.0])).unwrap();
    for _ in 0..10 {
        let y = random(&mut rng, 3, 2.0);
        let sigma = rng.random_range(0.2..2.0);
        let p = g.resolve(&y_space, sigma, y.view()).unwrap();
        let dual = y_space.dual();
        let o = argmin_oracle(
            &dual,
            |v| g.conjugate_value(&y_space, v).unwrap(),
            sigma,
            y.view(),
            None,
        )
        .unwrap();
        assert!(max_diff(&p, &o) <= 1e-6, "{p} vs {o}");
        let via = moreau_gstar_resolvent(
            &y_space,
            sigma,
            |v| g.inner_resolve(&y_space, sigma, v),
            y.view(),
        )
        .unwrap();
        assert!(max_diff(&p, &via) <= 1e-14);
    }
}
