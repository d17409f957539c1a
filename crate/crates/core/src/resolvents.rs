//! Generalized resolvents `(tau d h + J)^{-1}` for the functional catalog.
//!
//! Primal functionals `f` act on `X` and are resolved from a dual input in
//! `X*`. Data fidelities `g` act on `Y`; the solver needs the resolvent of the
//! conjugate `g*`, which maps an input in `Y` to a point of `Y*`.

use ndarray::{Array1, ArrayView1, Zip};

use crate::error::{check_dim, invalid, Error, Result};
use crate::spaces::{pairing, Space, SpaceKind};

const ROOT_MAX_ITERS: usize = 100;

/// Unique nonnegative root of `a t^{r-1} + t = c` for `a >= 0`, `c >= 0`.
///
/// Newton steps are kept inside the shrinking bracket `[0, c]` and replaced by
/// bisection whenever they would leave it.
pub fn power_root(a: f64, r: f64, c: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Ok(0.0);
    }
    if a == 0.0 {
        return Ok(c);
    }
    let (mut lo, mut hi) = (0.0_f64, c);
    // Initial guess from whichever term dominates.
    let mut t = c.min((c / a).powf(1.0 / (r - 1.0)));
    let tol = 1e-12 * (1.0 + c);
    for _ in 0..ROOT_MAX_ITERS {
        let g = a * t.powf(r - 1.0) + t - c;
        if g == 0.0 {
            return Ok(t);
        }
        if g > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let dg = a * (r - 1.0) * t.powf(r - 2.0) + 1.0;
        let mut next = t - g / dg;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() <= 4.0 * f64::EPSILON * t.max(f64::MIN_POSITIVE)
            || hi - lo <= 4.0 * f64::EPSILON * hi
        {
            let res = (a * next.powf(r - 1.0) + next - c).abs();
            if res <= tol {
                return Ok(next);
            }
        }
        t = next;
    }
    let res = (a * t.powf(r - 1.0) + t - c).abs();
    if res <= tol {
        Ok(t)
    } else {
        Err(Error::NonConvergence(format!(
            "scalar root of a t^(r-1) + t = c: residual {res:e} after {ROOT_MAX_ITERS} iterations"
        )))
    }
}

fn check_box(lower: &ArrayView1<f64>, upper: &ArrayView1<f64>) -> Result<()> {
    check_dim(lower.len(), upper.len())?;
    for (l, u) in lower.iter().zip(upper.iter()) {
        if l.is_nan() || u.is_nan() || l > u {
            return Err(invalid(format!("empty box: lower {l} exceeds upper {u}")));
        }
    }
    Ok(())
}

/// Minimizer of `(scale/q) ||z||^q - <z, target>` over the box `[lower, upper]`
/// in a weighted sequence space `l^r_W`.
///
/// For `q = r` the objective is separable. For `q > r` the optimality system
/// decouples once `nu = ||z||` is fixed, and `nu` is the unique root of the
/// nonincreasing map `nu -> ||z(nu)|| - nu`, found by bisection. With
/// `scale = 1`, `q = 2` this is the generalized projection onto the box.
pub fn box_minimize(
    space: &Space,
    scale: f64,
    q: f64,
    target: ArrayView1<f64>,
    lower: ArrayView1<f64>,
    upper: ArrayView1<f64>,
) -> Result<Array1<f64>> {
    check_dim(space.dim(), target.len())?;
    check_dim(space.dim(), lower.len())?;
    check_box(&lower, &upper)?;
    if !(scale > 0.0) {
        return Err(invalid(format!("scale must be positive, got {scale}")));
    }
    let weights = match space.kind() {
        SpaceKind::WeightedLr { weights } => weights,
        SpaceKind::SobolevPeriodic { .. } => {
            return Err(Error::Unsupported(
                "box-constrained minimization needs a separable norm".into(),
            ))
        }
    };
    let r = space.exponent();
    if q < r {
        return Err(Error::Unsupported(format!(
            "box minimization of the power {q} of an l^{r} norm"
        )));
    }
    let clip = |v: f64, l: f64, u: f64| v.max(l).min(u);
    if r == 2.0 && q == 2.0 {
        return Ok(Zip::from(&target)
            .and(weights)
            .and(&lower)
            .and(&upper)
            .map_collect(|&t, &w, &l, &u| clip(t / (scale * w), l, u)));
    }
    let e = 1.0 / (r - 1.0);
    // Coordinates of the minimizer for a given norm level nu.
    let at_level = |nu: f64| -> Array1<f64> {
        let lnu = if q == r { 0.0 } else { (q - r) * nu.ln() };
        Zip::from(&target)
            .and(weights)
            .and(&lower)
            .and(&upper)
            .map_collect(|&t, &w, &l, &u| {
                if t == 0.0 {
                    return clip(0.0, l, u);
                }
                let mag = ((t.abs().ln() - (scale * w).ln() - lnu) * e).exp();
                clip(t.signum() * mag, l, u)
            })
    };
    if q == r {
        return Ok(at_level(1.0));
    }
    let excess = |nu: f64| -> (f64, Array1<f64>) {
        let z = at_level(nu);
        if z.iter().any(|v| !v.is_finite()) {
            return (f64::INFINITY, z);
        }
        let n = space.norm(z.view()).expect("dimension checked");
        (n - nu, z)
    };
    // Unconstrained level as the starting point of the bracket search.
    let dual_norm = space.dual().norm(target)?;
    let mut nu = (dual_norm / scale).powf(1.0 / (q - 1.0));
    if !(nu > 0.0 && nu.is_finite()) {
        nu = 1.0;
    }
    let (mut lo, mut hi);
    let (phi, z) = excess(nu);
    if phi == 0.0 {
        return Ok(z);
    }
    if phi > 0.0 {
        lo = nu;
        hi = nu;
        loop {
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::NonConvergence(
                    "box minimizer norm is unbounded".into(),
                ));
            }
            if excess(hi).0 <= 0.0 {
                break;
            }
            lo = hi;
        }
    } else {
        hi = nu;
        lo = nu;
        loop {
            lo *= 0.5;
            if lo < 1e-300 {
                // The minimizer sits at the origin level.
                return Ok(at_level(1e-300).mapv(|v| if v.abs() < 1e-290 { 0.0 } else { v }));
            }
            if excess(lo).0 >= 0.0 {
                break;
            }
            hi = lo;
        }
    }
    for _ in 0..400 {
        let mid = if hi > 2.0 * lo {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if mid <= lo || mid >= hi {
            break;
        }
        let (phi, z) = excess(mid);
        if phi == 0.0 {
            return Ok(z);
        }
        if phi > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(at_level(0.5 * (lo + hi)))
}

fn require_finite_box(lower: &ArrayView1<f64>, upper: &ArrayView1<f64>) -> Result<()> {
    check_box(lower, upper)?;
    if lower.iter().chain(upper.iter()).any(|v| !v.is_finite()) {
        return Err(invalid("gap boxes must be bounded"));
    }
    Ok(())
}

/// Primal functional `f` on `X`.
#[derive(Clone, Debug, PartialEq)]
pub enum PrimalFn {
    /// `(scale / r) ||x||_X^r`.
    PowerNorm {
        r: f64,
        scale: f64,
    },
    /// `scale * sum_j |x_j|`.
    L1 {
        scale: f64,
    },
    /// Indicator of the box `[lower, upper]`.
    Box {
        lower: Array1<f64>,
        upper: Array1<f64>,
    },
    Zero,
}

impl PrimalFn {
    pub fn power_norm(r: f64, scale: f64) -> Result<Self> {
        if !(r.is_finite() && r > 1.0) {
            return Err(invalid(format!("power must exceed 1, got {r}")));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(invalid(format!("scale must be positive, got {scale}")));
        }
        Ok(Self::PowerNorm { r, scale })
    }

    /// `(scale/2) ||x||^2`.
    pub fn half_square(scale: f64) -> Result<Self> {
        Self::power_norm(2.0, scale)
    }

    pub fn l1(scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(invalid(format!("scale must be positive, got {scale}")));
        }
        Ok(Self::L1 { scale })
    }

    pub fn boxed(lower: Array1<f64>, upper: Array1<f64>) -> Result<Self> {
        check_box(&lower.view(), &upper.view())?;
        Ok(Self::Box { lower, upper })
    }

    /// Convexity modulus `gamma` with `f(u) >= f(x) + <u - x, xi> + gamma B_X(u, x)`.
    pub fn modulus(&self) -> f64 {
        match self {
            Self::PowerNorm { r, scale } if *r == 2.0 => *scale,
            _ => 0.0,
        }
    }

    /// `(tau d f + J_X)^{-1}(x*)`.
    pub fn resolve(&self, space: &Space, tau: f64, xstar: ArrayView1<f64>) -> Result<Array1<f64>> {
        check_dim(space.dim(), xstar.len())?;
        if !(tau > 0.0) {
            return Err(invalid(format!("step must be positive, got {tau}")));
        }
        let dual = space.dual();
        match self {
            Self::Zero => dual.j(xstar),
            Self::PowerNorm { r, scale } => {
                let base = dual.j(xstar)?;
                if *r == 2.0 {
                    return Ok(base / (tau * scale + 1.0));
                }
                let c = dual.norm(xstar)?;
                if c == 0.0 {
                    return Ok(base);
                }
                let alpha = power_root(tau * scale, *r, c)?;
                Ok(base * (alpha / c))
            }
            Self::L1 { scale } => {
                if !space.is_separable() {
                    return Err(Error::Unsupported(
                        "l1 shrinkage does not commute with the Sobolev lift".into(),
                    ));
                }
                let t = tau * scale;
                let shrunk = xstar.mapv(|v| (v.abs() - t).max(0.0) * v.signum());
                dual.j(shrunk.view())
            }
            Self::Box { lower, upper } => {
                box_minimize(space, 1.0, 2.0, xstar, lower.view(), upper.view())
            }
        }
    }

    /// `f(x)`, possibly `+inf`.
    pub fn value(&self, space: &Space, x: ArrayView1<f64>) -> Result<f64> {
        check_dim(space.dim(), x.len())?;
        Ok(match self {
            Self::Zero => 0.0,
            Self::PowerNorm { r, scale } => scale / r * space.norm(x)?.powf(*r),
            Self::L1 { scale } => scale * x.iter().map(|v| v.abs()).sum::<f64>(),
            Self::Box { lower, upper } => {
                let inside = Zip::from(&x)
                    .and(lower)
                    .and(upper)
                    .all(|&v, &l, &u| v >= l && v <= u);
                if inside {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        })
    }

    /// `min_{x in [lower, upper]} <x, c> + f(x)`.
    pub fn min_linear_over_box(
        &self,
        space: &Space,
        c: ArrayView1<f64>,
        lower: ArrayView1<f64>,
        upper: ArrayView1<f64>,
    ) -> Result<f64> {
        check_dim(space.dim(), c.len())?;
        check_dim(space.dim(), lower.len())?;
        require_finite_box(&lower, &upper)?;
        let linear_min = |c: f64, l: f64, u: f64| (c * l).min(c * u);
        Ok(match self {
            Self::Zero => Zip::from(&c)
                .and(&lower)
                .and(&upper)
                .fold(0.0, |acc, &c, &l, &u| acc + linear_min(c, l, u)),
            Self::L1 { scale } => {
                Zip::from(&c)
                    .and(&lower)
                    .and(&upper)
                    .fold(0.0, |acc, &c, &l, &u| {
                        let kink = 0.0_f64.max(l).min(u);
                        let h = |z: f64| c * z + scale * z.abs();
                        acc + h(l).min(h(u)).min(h(kink))
                    })
            }
            Self::Box {
                lower: fl,
                upper: fu,
            } => {
                let mut acc = 0.0;
                for j in 0..c.len() {
                    let l = lower[j].max(fl[j]);
                    let u = upper[j].min(fu[j]);
                    if l > u {
                        return Ok(f64::INFINITY);
                    }
                    acc += linear_min(c[j], l, u);
                }
                acc
            }
            Self::PowerNorm { r, scale } => {
                let target = c.mapv(|v| -v);
                let z = box_minimize(space, *scale, *r, target.view(), lower, upper)?;
                scale / r * space.norm(z.view())?.powf(*r) + pairing(z.view(), c)
            }
        })
    }
}

/// `J_Y(y - sigma * inner(y))`: the resolvent of `g*` assembled from the
/// resolvent `inner = (J_{Y*} d g + sigma I)^{-1}` of `g` itself.
pub fn moreau_gstar_resolvent<F>(
    space_y: &Space,
    sigma: f64,
    inner: F,
    y: ArrayView1<f64>,
) -> Result<Array1<f64>>
where
    F: FnOnce(ArrayView1<f64>) -> Result<Array1<f64>>,
{
    check_dim(space_y.dim(), y.len())?;
    if !(sigma > 0.0) {
        return Err(invalid(format!("step must be positive, got {sigma}")));
    }
    let z = inner(y)?;
    check_dim(space_y.dim(), z.len())?;
    let v = Zip::from(&y).and(&z).map_collect(|&y, &z| y - sigma * z);
    space_y.j(v.view())
}

/// Componentwise `(J_{Y*} d S + sigma I)^{-1}(y)` for the Poisson fidelity
/// `S(z) = sum_j z_j - y_obs_j ln z_j` on `Y = l^2_W`.
pub fn kl_inner(
    sigma: f64,
    y_obs: ArrayView1<f64>,
    weights: ArrayView1<f64>,
    y: ArrayView1<f64>,
) -> Result<Array1<f64>> {
    check_dim(y_obs.len(), y.len())?;
    check_dim(weights.len(), y.len())?;
    if !(sigma > 0.0) {
        return Err(invalid(format!("step must be positive, got {sigma}")));
    }
    Ok(Zip::from(&y)
        .and(&y_obs)
        .and(&weights)
        .map_collect(|&y, &obs, &w| {
            let winv = 1.0 / w;
            let a = y - winv;
            let disc = (a * a + 4.0 * sigma * winv * obs).sqrt();
            if a >= 0.0 {
                (a + disc) / (2.0 * sigma)
            } else if obs == 0.0 {
                0.0
            } else {
                2.0 * winv * obs / (disc - a)
            }
        }))
}

/// Conjugate of the scalar Poisson term `z - obs ln z`.
fn kl_conjugate(obs: f64, p: f64) -> f64 {
    if obs > 0.0 {
        if p < 1.0 {
            -obs + obs * (obs / (1.0 - p)).ln()
        } else {
            f64::INFINITY
        }
    } else if p <= 1.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Data fidelity `g` on `Y`.
#[derive(Clone, Debug, PartialEq)]
pub enum DataFn {
    /// `g(y) = (1/2) ||y - y0||_Y^2`.
    QuadraticShift { y0: Array1<f64> },
    /// `g(y) = S(y + shift)` with `S(z) = sum_j z_j - y_obs_j ln z_j` and the
    /// convention `0 ln 0 = 0`. Requires `Y = l^2_W`.
    KlPoisson {
        y_obs: Array1<f64>,
        shift: Array1<f64>,
    },
    /// `g = 0`, whose conjugate is the indicator of the origin.
    Zero,
    /// Indicator of the origin, whose conjugate vanishes.
    ZeroConjugate,
}

impl DataFn {
    pub fn quadratic(y0: Array1<f64>) -> Self {
        Self::QuadraticShift { y0 }
    }

    pub fn kl_poisson(y_obs: Array1<f64>, shift: Option<Array1<f64>>) -> Result<Self> {
        if let Some(v) = y_obs.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(invalid(format!(
                "Poisson observations must be nonnegative, found {v}"
            )));
        }
        let shift = shift.unwrap_or_else(|| Array1::zeros(y_obs.len()));
        check_dim(y_obs.len(), shift.len())?;
        Ok(Self::KlPoisson { y_obs, shift })
    }

    /// Convexity modulus `delta` of `g*` measured in `B_{Y*}`.
    pub fn modulus(&self) -> f64 {
        match self {
            Self::QuadraticShift { .. } => 1.0,
            _ => 0.0,
        }
    }

    fn kl_weights(space_y: &Space) -> Result<&Array1<f64>> {
        match space_y.weights() {
            Some(w) if space_y.exponent() == 2.0 => Ok(w),
            _ => Err(Error::Unsupported(
                "the Poisson fidelity resolvent needs a weighted l^2 data space".into(),
            )),
        }
    }

    /// `(J_{Y*} d g + sigma I)^{-1}(y)`, the resolvent of `g` itself.
    pub fn inner_resolve(
        &self,
        space_y: &Space,
        sigma: f64,
        y: ArrayView1<f64>,
    ) -> Result<Array1<f64>> {
        check_dim(space_y.dim(), y.len())?;
        match self {
            Self::QuadraticShift { y0 } => Ok(Zip::from(&y)
                .and(y0)
                .map_collect(|&y, &y0| (y + y0) / (1.0 + sigma))),
            Self::KlPoisson { y_obs, shift } => {
                let w = Self::kl_weights(space_y)?;
                let moved = Zip::from(&y).and(shift).map_collect(|&y, &b| y + sigma * b);
                let u = kl_inner(sigma, y_obs.view(), w.view(), moved.view())?;
                Ok(u - shift)
            }
            Self::Zero => Ok(y.mapv(|v| v / sigma)),
            Self::ZeroConjugate => Ok(Array1::zeros(y.len())),
        }
    }

    /// `(sigma d g* + J_{Y*})^{-1}(y)`.
    pub fn resolve(&self, space_y: &Space, sigma: f64, y: ArrayView1<f64>) -> Result<Array1<f64>> {
        check_dim(space_y.dim(), y.len())?;
        if !(sigma > 0.0) {
            return Err(invalid(format!("step must be positive, got {sigma}")));
        }
        match self {
            Self::QuadraticShift { y0 } => {
                check_dim(space_y.dim(), y0.len())?;
                let v = Zip::from(&y)
                    .and(y0)
                    .map_collect(|&y, &y0| (y - sigma * y0) / (sigma + 1.0));
                space_y.j(v.view())
            }
            Self::KlPoisson { .. } => {
                moreau_gstar_resolvent(space_y, sigma, |v| self.inner_resolve(space_y, sigma, v), y)
            }
            Self::Zero => Ok(Array1::zeros(y.len())),
            Self::ZeroConjugate => space_y.j(y),
        }
    }

    /// `g(y)`, possibly `+inf`.
    pub fn value(&self, space_y: &Space, y: ArrayView1<f64>) -> Result<f64> {
        check_dim(space_y.dim(), y.len())?;
        Ok(match self {
            Self::QuadraticShift { y0 } => {
                let d = &y - y0;
                0.5 * space_y.norm(d.view())?.powi(2)
            }
            Self::KlPoisson { y_obs, shift } => {
                let mut acc = 0.0;
                for ((&y, &b), &obs) in y.iter().zip(shift).zip(y_obs) {
                    let z = y + b;
                    if z < 0.0 || (z == 0.0 && obs > 0.0) {
                        return Ok(f64::INFINITY);
                    }
                    acc += z - if obs > 0.0 { obs * z.ln() } else { 0.0 };
                }
                acc
            }
            Self::Zero => 0.0,
            Self::ZeroConjugate => {
                if y.iter().all(|&v| v == 0.0) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        })
    }

    /// `g*(p)`, possibly `+inf`.
    pub fn conjugate_value(&self, space_y: &Space, p: ArrayView1<f64>) -> Result<f64> {
        check_dim(space_y.dim(), p.len())?;
        Ok(match self {
            Self::QuadraticShift { y0 } => {
                0.5 * space_y.dual().norm(p)?.powi(2) + pairing(y0.view(), p)
            }
            Self::KlPoisson { y_obs, shift } => {
                let mut acc = 0.0;
                for ((&p, &b), &obs) in p.iter().zip(shift).zip(y_obs) {
                    acc += kl_conjugate(obs, p) - b * p;
                }
                acc
            }
            Self::Zero => {
                if p.iter().all(|&v| v == 0.0) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Self::ZeroConjugate => 0.0,
        })
    }

    /// `max_{p in [lower, upper]} <y, p> - g*(p)`.
    pub fn max_linear_over_box(
        &self,
        space_y: &Space,
        y: ArrayView1<f64>,
        lower: ArrayView1<f64>,
        upper: ArrayView1<f64>,
    ) -> Result<f64> {
        check_dim(space_y.dim(), y.len())?;
        check_dim(space_y.dim(), lower.len())?;
        require_finite_box(&lower, &upper)?;
        Ok(match self {
            Self::QuadraticShift { y0 } => {
                let target = &y - y0;
                let dual = space_y.dual();
                let p = box_minimize(&dual, 1.0, 2.0, target.view(), lower, upper)?;
                pairing(p.view(), target.view()) - 0.5 * dual.norm(p.view())?.powi(2)
            }
            Self::KlPoisson { y_obs, shift } => {
                let mut acc = 0.0;
                for j in 0..y.len() {
                    let (obs, a) = (y_obs[j], y[j] + shift[j]);
                    let (l, u) = (lower[j], upper[j]);
                    let best = if obs > 0.0 {
                        if l >= 1.0 {
                            return Ok(f64::NEG_INFINITY);
                        }
                        // Concave in p with stationary point 1 - obs / a.
                        let p = if a > 0.0 {
                            (1.0 - obs / a).max(l).min(u)
                        } else {
                            l
                        };
                        a * p - kl_conjugate(obs, p)
                    } else {
                        if l > 1.0 {
                            return Ok(f64::NEG_INFINITY);
                        }
                        let hi = u.min(1.0);
                        (a * l).max(a * hi)
                    };
                    acc += best;
                }
                acc
            }
            Self::Zero => {
                let inside = lower
                    .iter()
                    .zip(upper.iter())
                    .all(|(&l, &u)| l <= 0.0 && u >= 0.0);
                if inside {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            Self::ZeroConjugate => Zip::from(&y)
                .and(&lower)
                .and(&upper)
                .fold(0.0, |acc, &y, &l, &u| acc + (y * l).max(y * u)),
        })
    }
}
