//! Finite-dimensional Banach space geometry.
//!
//! Two families are supported:
//!
//! * weighted sequence spaces `l^r_W` with norm `(sum_j w_j |x_j|^r)^(1/r)`;
//! * periodic discrete Sobolev spaces `H^{s,r}` on a `d`-dimensional grid of
//!   `N` points per axis, normed through a Bessel potential multiplier.
//!
//! Primal and dual vectors are plain coordinate arrays paired by the
//! Euclidean inner product. A dual vector is measured with the descriptor
//! returned by [`Space::dual`].

use std::sync::Arc;

use ndarray::{Array1, ArrayView1, Zip};
use num_complex::Complex64;

use crate::error::{check_dim, invalid, Error, Result};
use crate::fft::FftGrid;

/// Safety factor applied to the `r - 1` bound of the 2-convexity constant.
pub const CONVEXITY_SAFETY: f64 = 0.99;

#[derive(Clone, Debug)]
pub enum SpaceKind {
    WeightedLr {
        weights: Array1<f64>,
    },
    SobolevPeriodic {
        /// Smoothness order; `H^{0,r}` coincides with `l^r`.
        s: f64,
        /// Grid shape, `d` axes of `N` points each.
        dims: Vec<usize>,
        /// Grid half-width factor `a`; frequencies are integers divided by `a`.
        scale: f64,
        fft: Arc<FftGrid>,
        /// `(1 + |xi|^2)` on the frequency grid.
        symbol: Arc<Vec<f64>>,
    },
}

/// A finite-dimensional smooth, reflexive Banach space.
#[derive(Clone, Debug)]
pub struct Space {
    r: f64,
    kind: SpaceKind,
}

impl PartialEq for Space {
    fn eq(&self, other: &Self) -> bool {
        if self.r != other.r {
            return false;
        }
        match (&self.kind, &other.kind) {
            (SpaceKind::WeightedLr { weights: a }, SpaceKind::WeightedLr { weights: b }) => a == b,
            (
                SpaceKind::SobolevPeriodic {
                    s: s1,
                    dims: d1,
                    scale: a1,
                    ..
                },
                SpaceKind::SobolevPeriodic {
                    s: s2,
                    dims: d2,
                    scale: a2,
                    ..
                },
            ) => s1 == s2 && d1 == d2 && a1 == a2,
            _ => false,
        }
    }
}

fn check_exponent(r: f64) -> Result<()> {
    if r.is_finite() && r > 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("exponent r must lie in (1, inf), got {r}")))
    }
}

/// Conjugate exponent `r* = r / (r - 1)`.
pub fn conjugate_exponent(r: f64) -> f64 {
    r / (r - 1.0)
}

impl Space {
    /// Unweighted `l^r` of dimension `dim`.
    pub fn lr(r: f64, dim: usize) -> Result<Self> {
        Self::weighted_lr(r, Array1::ones(dim))
    }

    /// Euclidean `l^2` of dimension `dim`.
    pub fn hilbert(dim: usize) -> Self {
        Self::lr(2.0, dim).expect("l^2 is always valid")
    }

    pub fn weighted_lr(r: f64, weights: Array1<f64>) -> Result<Self> {
        check_exponent(r)?;
        if weights.is_empty() {
            return Err(invalid("space dimension must be positive"));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(invalid(format!(
                "weights must be strictly positive, found {w}"
            )));
        }
        Ok(Self {
            r,
            kind: SpaceKind::WeightedLr { weights },
        })
    }

    /// Periodic Sobolev space `H^{s,r}` on `d` axes with `n` points each and
    /// grid half-width factor `scale`.
    pub fn sobolev(r: f64, s: f64, d: usize, n: usize, scale: f64) -> Result<Self> {
        check_exponent(r)?;
        if d == 0 {
            return Err(invalid("Sobolev grid needs at least one axis"));
        }
        if n < 2 || !n.is_multiple_of(2) {
            return Err(invalid(format!(
                "points per axis must be even and >= 2, got {n}"
            )));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(invalid(format!("grid scale must be positive, got {scale}")));
        }
        if !s.is_finite() {
            return Err(invalid("smoothness order must be finite"));
        }
        let dims = vec![n; d];
        let fft = FftGrid::new(&dims);
        let symbol = fft
            .squared_frequencies(1.0 / scale)
            .into_iter()
            .map(|xi2| 1.0 + xi2)
            .collect();
        Ok(Self {
            r,
            kind: SpaceKind::SobolevPeriodic {
                s,
                dims,
                scale,
                fft: Arc::new(fft),
                symbol: Arc::new(symbol),
            },
        })
    }

    pub fn kind(&self) -> &SpaceKind {
        &self.kind
    }

    pub fn exponent(&self) -> f64 {
        self.r
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            SpaceKind::WeightedLr { weights } => weights.len(),
            SpaceKind::SobolevPeriodic { fft, .. } => fft.len(),
        }
    }

    /// Whether the norm is a weighted sum over coordinates.
    pub fn is_separable(&self) -> bool {
        matches!(self.kind, SpaceKind::WeightedLr { .. })
    }

    /// Euclidean space with unit weights: all duality maps are the identity.
    pub fn is_euclidean(&self) -> bool {
        match &self.kind {
            SpaceKind::WeightedLr { weights } => self.r == 2.0 && weights.iter().all(|&w| w == 1.0),
            SpaceKind::SobolevPeriodic { s, .. } => self.r == 2.0 && *s == 0.0,
        }
    }

    /// Weights of a weighted sequence space.
    pub fn weights(&self) -> Option<&Array1<f64>> {
        match &self.kind {
            SpaceKind::WeightedLr { weights } => Some(weights),
            SpaceKind::SobolevPeriodic { .. } => None,
        }
    }

    /// Dual descriptor with respect to the Euclidean pairing.
    ///
    /// `l^r_W` dualizes to `l^{r*}` with weights `W^{-r*/r}`, which is what the
    /// componentwise duality map formula requires for its dual-norm identity.
    /// `H^{s,r}` dualizes to `H^{-s,r*}`.
    pub fn dual(&self) -> Space {
        let rs = conjugate_exponent(self.r);
        let kind = match &self.kind {
            SpaceKind::WeightedLr { weights } => {
                let e = -rs / self.r;
                SpaceKind::WeightedLr {
                    weights: weights.mapv(|w| if e == -1.0 { 1.0 / w } else { w.powf(e) }),
                }
            }
            SpaceKind::SobolevPeriodic {
                s,
                dims,
                scale,
                fft,
                symbol,
            } => SpaceKind::SobolevPeriodic {
                s: -s,
                dims: dims.clone(),
                scale: *scale,
                fft: fft.clone(),
                symbol: symbol.clone(),
            },
        };
        Space { r: rs, kind }
    }

    fn check(&self, v: &ArrayView1<f64>) -> Result<()> {
        check_dim(self.dim(), v.len())
    }

    /// Apply the Bessel potential `Lambda_t = F^{-1} diag[(1+|xi|^2)^{-t/2}] F`
    /// on the grid of a Sobolev space.
    pub fn bessel_potential(&self, t: f64, v: ArrayView1<f64>) -> Result<Array1<f64>> {
        self.check(&v)?;
        match &self.kind {
            SpaceKind::SobolevPeriodic { fft, symbol, .. } => {
                Ok(apply_multiplier(fft, symbol, t, v))
            }
            SpaceKind::WeightedLr { .. } => Err(Error::Unsupported(
                "Bessel potentials are defined on Sobolev grids only".into(),
            )),
        }
    }

    pub fn norm(&self, v: ArrayView1<f64>) -> Result<f64> {
        self.check(&v)?;
        Ok(match &self.kind {
            SpaceKind::WeightedLr { weights } => weighted_norm(self.r, weights.view(), v),
            SpaceKind::SobolevPeriodic { s, fft, symbol, .. } => {
                let lifted = apply_multiplier(fft, symbol, -s, v);
                unit_norm(self.r, lifted.view())
            }
        })
    }

    /// Duality map `J_q` with gauge `t^{q-1}`: the gradient of `||x||^q / q`.
    /// Defined as zero at the origin.
    pub fn duality_map(&self, q: f64, v: ArrayView1<f64>) -> Result<Array1<f64>> {
        self.check(&v)?;
        if !(q.is_finite() && q > 1.0) {
            return Err(invalid(format!("gauge exponent q must exceed 1, got {q}")));
        }
        Ok(match &self.kind {
            SpaceKind::WeightedLr { weights } => weighted_duality(self.r, q, weights.view(), v),
            SpaceKind::SobolevPeriodic { s, fft, symbol, .. } => {
                if *s == 0.0 {
                    unit_duality(self.r, q, v)
                } else {
                    let lifted = apply_multiplier(fft, symbol, -s, v);
                    let inner = unit_duality(self.r, q, lifted.view());
                    apply_multiplier(fft, symbol, -s, inner.view())
                }
            }
        })
    }

    /// Normalized duality map `J = J_2`.
    pub fn j(&self, v: ArrayView1<f64>) -> Result<Array1<f64>> {
        self.duality_map(2.0, v)
    }

    /// Inverse of `J_q`, which is `J_{q*}` of the dual space.
    pub fn inverse_duality_map(&self, q: f64, v: ArrayView1<f64>) -> Result<Array1<f64>> {
        self.dual().duality_map(conjugate_exponent(q), v)
    }

    /// Bregman distance of `||.||^2 / 2`:
    /// `B(u, x) = ||u||^2/2 - ||x||^2/2 - <u - x, J(x)>`.
    pub fn bregman(&self, u: ArrayView1<f64>, x: ArrayView1<f64>) -> Result<f64> {
        let jx = self.j(x)?;
        self.bregman_with(u, x, jx.view())
    }

    /// Bregman distance with a precomputed `J(x)`.
    pub fn bregman_with(
        &self,
        u: ArrayView1<f64>,
        x: ArrayView1<f64>,
        jx: ArrayView1<f64>,
    ) -> Result<f64> {
        self.check(&u)?;
        let nu = self.norm(u)?;
        let nx = self.norm(x)?;
        let cross: f64 = Zip::from(&u)
            .and(&x)
            .and(&jx)
            .fold(0.0, |acc, &a, &b, &j| acc + (a - b) * j);
        Ok(0.5 * nu * nu - 0.5 * nx * nx - cross)
    }

    /// 2-convexity constant `c` with `B(u, x) >= c/2 ||u - x||^2`.
    ///
    /// `1` for the Euclidean exponent, `0.99 (r - 1)` for `r` in `(1, 2)`;
    /// spaces with `r > 2` are not 2-convex.
    pub fn convexity_constant(&self) -> Result<f64> {
        if self.r > 2.0 {
            return Err(invalid(format!(
                "space with exponent {} is not 2-convex; use it in a 2-smooth role",
                self.r
            )));
        }
        Ok(if self.r == 2.0 {
            1.0
        } else {
            (CONVEXITY_SAFETY * (self.r - 1.0)).min(1.0)
        })
    }
}

/// Constants `C_X` and `C_{Y*}` of the primal space and the dual of the data space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvexityConstants {
    pub c_x: f64,
    pub c_ystar: f64,
}

impl ConvexityConstants {
    pub fn for_spaces(x: &Space, y: &Space) -> Result<Self> {
        Ok(Self {
            c_x: x.convexity_constant()?,
            c_ystar: y.dual().convexity_constant()?,
        })
    }

    pub fn product(&self) -> f64 {
        self.c_x * self.c_ystar
    }

    pub fn min(&self) -> f64 {
        self.c_x.min(self.c_ystar)
    }
}

/// Euclidean pairing `<x, x*>`.
pub fn pairing(x: ArrayView1<f64>, xs: ArrayView1<f64>) -> f64 {
    x.dot(&xs)
}

fn max_abs(v: ArrayView1<f64>) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn weighted_norm(r: f64, w: ArrayView1<f64>, v: ArrayView1<f64>) -> f64 {
    let m = max_abs(v);
    if m == 0.0 {
        return 0.0;
    }
    if r == 2.0 {
        let s: f64 = Zip::from(&w)
            .and(&v)
            .fold(0.0, |acc, &w, &x| acc + w * (x / m) * (x / m));
        return m * s.sqrt();
    }
    let s: f64 = Zip::from(&w)
        .and(&v)
        .fold(0.0, |acc, &w, &x| acc + w * (x.abs() / m).powf(r));
    m * s.powf(1.0 / r)
}

fn unit_norm(r: f64, v: ArrayView1<f64>) -> f64 {
    let m = max_abs(v);
    if m == 0.0 {
        return 0.0;
    }
    let s: f64 = if r == 2.0 {
        v.iter().map(|x| (x / m) * (x / m)).sum()
    } else {
        v.iter().map(|x| (x.abs() / m).powf(r)).sum()
    };
    m * s.powf(1.0 / r)
}

/// `J_q(x) = W |x|^{r-1} sign(x) / ||x||^{r-q}`, evaluated on `x / max|x|`.
fn weighted_duality(r: f64, q: f64, w: ArrayView1<f64>, v: ArrayView1<f64>) -> Array1<f64> {
    if r == 2.0 && q == 2.0 {
        return &w * &v;
    }
    let m = max_abs(v);
    if m == 0.0 {
        return Array1::zeros(v.len());
    }
    let scaled = v.mapv(|x| x / m);
    let nu = weighted_norm(r, w, scaled.view());
    let factor = m.powf(q - 1.0) * nu.powf(q - r);
    Zip::from(&w)
        .and(&scaled)
        .map_collect(|&w, &x| w * x.abs().powf(r - 1.0) * x.signum() * factor)
}

fn unit_duality(r: f64, q: f64, v: ArrayView1<f64>) -> Array1<f64> {
    if r == 2.0 && q == 2.0 {
        return v.to_owned();
    }
    let m = max_abs(v);
    if m == 0.0 {
        return Array1::zeros(v.len());
    }
    let scaled = v.mapv(|x| x / m);
    let nu = unit_norm(r, scaled.view());
    let factor = m.powf(q - 1.0) * nu.powf(q - r);
    scaled.mapv(|x| x.abs().powf(r - 1.0) * x.signum() * factor)
}

/// Real grid function through the Fourier multiplier `symbol^{-t/2}`.
fn apply_multiplier(fft: &FftGrid, symbol: &[f64], t: f64, v: ArrayView1<f64>) -> Array1<f64> {
    if t == 0.0 {
        return v.to_owned();
    }
    let mut buf: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft.forward(&mut buf);
    let e = -0.5 * t;
    for (c, &m) in buf.iter_mut().zip(symbol) {
        *c *= m.powf(e);
    }
    fft.inverse(&mut buf);
    buf.into_iter().map(|c| c.re).collect()
}
