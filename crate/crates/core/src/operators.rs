//! Forward operators: dense matrices, the deconvolution kernel, the
//! near-field phase retrieval map with its derivative, and operator norm
//! estimation between Banach spaces.

use std::sync::Arc;

use ndarray::{Array1, Array2, ArrayView1};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, invalid, Error, Result};
use crate::fft::FftGrid;
use crate::spaces::Space;

/// Linear map `X -> Y` with its Banach adjoint `Y* -> X*`, both represented
/// through the Euclidean pairing.
pub trait LinearOperator: Send + Sync {
    fn domain_dim(&self) -> usize;
    fn range_dim(&self) -> usize;
    fn apply(&self, x: ArrayView1<f64>) -> Result<Array1<f64>>;
    fn adjoint(&self, y: ArrayView1<f64>) -> Result<Array1<f64>>;
}

/// Frechet differentiable map `X -> Y`.
pub trait NonlinearOperator: Send + Sync {
    fn domain_dim(&self) -> usize;
    fn range_dim(&self) -> usize;
    fn apply(&self, x: ArrayView1<f64>) -> Result<Array1<f64>>;
    fn derivative(&self, x: ArrayView1<f64>) -> Result<Arc<dyn LinearOperator>>;
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    matrix: Array2<f64>,
}

impl DenseOperator {
    pub fn new(matrix: Array2<f64>) -> Self {
        Self { matrix }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(Array2::eye(n))
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }
}

impl LinearOperator for DenseOperator {
    fn domain_dim(&self) -> usize {
        self.matrix.ncols()
    }

    fn range_dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn apply(&self, x: ArrayView1<f64>) -> Result<Array1<f64>> {
        check_dim(self.matrix.ncols(), x.len())?;
        Ok(self.matrix.dot(&x))
    }

    fn adjoint(&self, y: ArrayView1<f64>) -> Result<Array1<f64>> {
        check_dim(self.matrix.nrows(), y.len())?;
        Ok(self.matrix.t().dot(&y))
    }
}

impl NonlinearOperator for DenseOperator {
    fn domain_dim(&self) -> usize {
        self.matrix.ncols()
    }

    fn range_dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn apply(&self, x: ArrayView1<f64>) -> Result<Array1<f64>> {
        LinearOperator::apply(self, x)
    }

    fn derivative(&self, x: ArrayView1<f64>) -> Result<Arc<dyn LinearOperator>> {
        check_dim(self.matrix.ncols(), x.len())?;
        Ok(Arc::new(self.clone()))
    }
}

/// Discretized `(T x)(t) = int x(s) exp(-decay |t - s|) ds` from
/// `s in [-1/2, 1/2]` (`n_x` points) to `t in [-1, 1]` (`n_y` points), using
/// the trapezoidal rule with step `h = 1 / (n_x - 1)`.
pub fn convolution_operator(decay: f64, n_x: usize, n_y: usize) -> Result<DenseOperator> {
    if n_x < 2 || n_y < 2 {
        return Err(invalid(format!(
            "grid sizes must be at least 2, got {n_x} and {n_y}"
        )));
    }
    if !(decay.is_finite() && decay >= 0.0) {
        return Err(invalid(format!(
            "kernel decay must be nonnegative, got {decay}"
        )));
    }
    let h = 1.0 / (n_x - 1) as f64;
    let s = |j: usize| -0.5 + j as f64 * h;
    let t = |i: usize| -1.0 + 2.0 * i as f64 / (n_y - 1) as f64;
    let matrix = Array2::from_shape_fn((n_y, n_x), |(i, j)| {
        let w = if j == 0 || j == n_x - 1 { 0.5 } else { 1.0 };
        h * w * (-decay * (t(i) - s(j)).abs()).exp()
    });
    Ok(DenseOperator::new(matrix))
}

/// Result of the Banach power iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct NormEstimate {
    pub norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Whether the estimates never decreased along the iteration.
    pub monotone: bool,
    pub restarts: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerMethodOptions {
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for PowerMethodOptions {
    fn default() -> Self {
        Self {
            max_iters: 500,
            tol: 1e-8,
            seed: 0x5eed,
        }
    }
}

const MAX_RESTARTS: usize = 5;

/// Estimate `||T||_{X -> Y}` by iterating `x <- J_{X*}(T* J_Y(T x))` with
/// normalization in `X`.
pub fn power_method(
    op: &dyn LinearOperator,
    x_space: &Space,
    y_space: &Space,
    options: PowerMethodOptions,
) -> Result<NormEstimate> {
    check_dim(x_space.dim(), op.domain_dim())?;
    check_dim(y_space.dim(), op.range_dim())?;
    if options.max_iters == 0 || !(options.tol > 0.0) {
        return Err(invalid(
            "power method needs a positive iteration budget and tolerance",
        ));
    }
    let x_dual = x_space.dual();
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    for restart in 0..=MAX_RESTARTS {
        let mut x: Array1<f64> =
            Array1::from_iter((0..x_space.dim()).map(|_| StandardNormal.sample(&mut rng)));
        let n0 = x_space.norm(x.view())?;
        x /= n0;
        let mut estimate = y_space.norm(op.apply(x.view())?.view())?;
        let mut monotone = true;
        let mut zero_hit = false;
        for k in 1..=options.max_iters {
            let tx = op.apply(x.view())?;
            let back = op.adjoint(y_space.j(tx.view())?.view())?;
            let next = x_dual.j(back.view())?;
            let n = x_space.norm(next.view())?;
            if !(n > 0.0) || !n.is_finite() {
                zero_hit = true;
                break;
            }
            x = next / n;
            let value = y_space.norm(op.apply(x.view())?.view())?;
            if value < estimate * (1.0 - 1e-12) {
                monotone = false;
            }
            let change = (value - estimate).abs();
            estimate = value;
            if change <= options.tol * value {
                return Ok(NormEstimate {
                    norm: value,
                    iterations: k,
                    converged: true,
                    monotone,
                    restarts: restart,
                });
            }
        }
        if !zero_hit {
            return Ok(NormEstimate {
                norm: estimate,
                iterations: options.max_iters,
                converged: false,
                monotone,
                restarts: restart,
            });
        }
    }
    Err(Error::NonConvergence(format!(
        "power iteration collapsed to zero after {MAX_RESTARTS} restarts"
    )))
}

/// Geometry of a near-field holography setup.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FresnelConfig {
    /// Points per axis of the square grid.
    pub n: usize,
    pub wavenumber: f64,
    pub source_distance: f64,
    pub detector_distance: f64,
    /// Grid spacing in the object plane.
    pub pixel: f64,
}

impl Default for FresnelConfig {
    fn default() -> Self {
        Self {
            n: 64,
            wavenumber: 1.0,
            source_distance: 1.0,
            detector_distance: 1.0,
            pixel: 1.0,
        }
    }
}

impl FresnelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(invalid("phase grid needs at least 2 points per axis"));
        }
        for (name, v) in [
            ("wavenumber", self.wavenumber),
            ("source distance", self.source_distance),
            ("detector distance", self.detector_distance),
            ("pixel size", self.pixel),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Geometrical magnification `M = (R + D) / R`.
    pub fn magnification(&self) -> f64 {
        (self.source_distance + self.detector_distance) / self.source_distance
    }

    /// Effective propagation parameter `D / (M kappa)` of the magnified setup.
    pub fn chirp(&self) -> f64 {
        self.detector_distance / (self.magnification() * self.wavenumber)
    }
}

/// Fourier multiplier `F^{-1} exp(-i c |xi|^2) F` on a square grid with
/// angular frequencies `xi = 2 pi k / (N * pixel)`.
#[derive(Clone, Debug)]
pub struct FresnelPropagator {
    grid: Arc<FftGrid>,
    chirp: Vec<Complex64>,
}

impl FresnelPropagator {
    pub fn new(n: usize, pixel: f64, c: f64) -> Result<Self> {
        if n < 2 {
            return Err(invalid("propagator grid needs at least 2 points per axis"));
        }
        if !(pixel > 0.0) || !c.is_finite() {
            return Err(invalid(
                "propagator needs a positive pixel and finite distance",
            ));
        }
        let grid = FftGrid::new(&[n, n]);
        let step = 2.0 * std::f64::consts::PI / (n as f64 * pixel);
        let chirp = grid
            .squared_frequencies(step)
            .into_iter()
            .map(|xi2| Complex64::from_polar(1.0, -c * xi2))
            .collect();
        Ok(Self {
            grid: Arc::new(grid),
            chirp,
        })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    fn apply_multiplier(&self, field: &mut [Complex64], conjugate: bool) -> Result<()> {
        check_dim(self.grid.len(), field.len())?;
        self.grid.forward(field);
        for (v, m) in field.iter_mut().zip(&self.chirp) {
            *v *= if conjugate { m.conj() } else { *m };
        }
        self.grid.inverse(field);
        Ok(())
    }

    pub fn propagate(&self, field: &mut [Complex64]) -> Result<()> {
        self.apply_multiplier(field, false)
    }

    /// Adjoint, equal to the inverse since the multiplier is unimodular.
    pub fn propagate_adjoint(&self, field: &mut [Complex64]) -> Result<()> {
        self.apply_multiplier(field, true)
    }
}

/// Propagate a square complex field by the parameter `c`.
pub fn fresnel_propagate(
    n: usize,
    pixel: f64,
    c: f64,
    field: &[Complex64],
) -> Result<Vec<Complex64>> {
    let p = FresnelPropagator::new(n, pixel, c)?;
    let mut out = field.to_vec();
    p.propagate(&mut out)?;
    Ok(out)
}

/// Phase-contrast map `phi -> |P (exp(-i kappa phi))|^2 / M^2`, sampled on the
/// object-plane grid and labeled on the magnified detector grid.
#[derive(Clone, Debug)]
pub struct PhaseForward {
    config: FresnelConfig,
    propagator: FresnelPropagator,
}

impl PhaseForward {
    pub fn new(config: FresnelConfig) -> Result<Self> {
        config.validate()?;
        let propagator = FresnelPropagator::new(config.n, config.pixel, config.chirp())?;
        Ok(Self { config, propagator })
    }

    pub fn config(&self) -> &FresnelConfig {
        &self.config
    }

    fn object(&self, phi: ArrayView1<f64>) -> Vec<Complex64> {
        let kappa = self.config.wavenumber;
        phi.iter()
            .map(|&v| Complex64::from_polar(1.0, -kappa * v))
            .collect()
    }

    /// Exit wave `O_phi` and detector wave `P O_phi`.
    fn waves(&self, phi: ArrayView1<f64>) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        check_dim(self.propagator.len(), phi.len())?;
        let object = self.object(phi);
        let mut wave = object.clone();
        self.propagator.propagate(&mut wave)?;
        Ok((object, wave))
    }
}

impl NonlinearOperator for PhaseForward {
    fn domain_dim(&self) -> usize {
        self.propagator.len()
    }

    fn range_dim(&self) -> usize {
        self.propagator.len()
    }

    fn apply(&self, phi: ArrayView1<f64>) -> Result<Array1<f64>> {
        let (_, wave) = self.waves(phi)?;
        let m2 = self.config.magnification().powi(2);
        Ok(wave.iter().map(|u| u.norm_sqr() / m2).collect())
    }

    fn derivative(&self, phi: ArrayView1<f64>) -> Result<Arc<dyn LinearOperator>> {
        let (object, wave) = self.waves(phi)?;
        Ok(Arc::new(PhaseDerivative {
            propagator: self.propagator.clone(),
            object,
            wave,
            kappa: self.config.wavenumber,
            factor: 2.0 / self.config.magnification().powi(2),
        }))
    }
}

/// `h -> (2/M^2) Re(conj(P O) * P(-i kappa h O))` at a fixed phase.
#[derive(Clone, Debug)]
pub struct PhaseDerivative {
    propagator: FresnelPropagator,
    object: Vec<Complex64>,
    wave: Vec<Complex64>,
    kappa: f64,
    factor: f64,
}

impl LinearOperator for PhaseDerivative {
    fn domain_dim(&self) -> usize {
        self.object.len()
    }

    fn range_dim(&self) -> usize {
        self.wave.len()
    }

    fn apply(&self, h: ArrayView1<f64>) -> Result<Array1<f64>> {
        check_dim(self.object.len(), h.len())?;
        let mut buf: Vec<Complex64> = h
            .iter()
            .zip(&self.object)
            .map(|(&h, o)| Complex64::new(0.0, -self.kappa * h) * o)
            .collect();
        self.propagator.propagate(&mut buf)?;
        Ok(buf
            .iter()
            .zip(&self.wave)
            .map(|(v, u)| self.factor * (u.conj() * v).re)
            .collect())
    }

    fn adjoint(&self, y: ArrayView1<f64>) -> Result<Array1<f64>> {
        check_dim(self.wave.len(), y.len())?;
        let mut buf: Vec<Complex64> = y.iter().zip(&self.wave).map(|(&y, u)| u * y).collect();
        self.propagator.propagate_adjoint(&mut buf)?;
        Ok(buf
            .iter()
            .zip(&self.object)
            .map(|(v, o)| self.factor * (Complex64::new(0.0, -self.kappa) * o * v.conj()).re)
            .collect())
    }
}
