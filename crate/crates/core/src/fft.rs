//! Multi-dimensional complex FFT over a row-major grid.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Cached forward/inverse plans for a `dims[0] x dims[1] x ...` grid stored in
/// row-major order. The inverse is normalized so `inverse(forward(v)) == v`.
#[derive(Clone)]
pub struct FftGrid {
    dims: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl fmt::Debug for FftGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FftGrid").field("dims", &self.dims).finish()
    }
}

impl FftGrid {
    pub fn new(dims: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        let forward = dims.iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse = dims.iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        Self {
            dims: dims.to_vec(),
            forward,
            inverse,
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
        let scale = 1.0 / self.len() as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }

    fn transform(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>]) {
        assert_eq!(data.len(), self.len(), "FftGrid: buffer length mismatch");
        let total = self.len();
        let mut line = Vec::new();
        for (axis, plan) in plans.iter().enumerate() {
            let n = self.dims[axis];
            let stride: usize = self.dims[axis + 1..].iter().product();
            if stride == 1 {
                // contiguous lines
                plan.process(data);
                continue;
            }
            line.resize(n, Complex64::new(0.0, 0.0));
            let block = n * stride;
            for outer in (0..total).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    for (i, v) in line.iter_mut().enumerate() {
                        *v = data[base + i * stride];
                    }
                    plan.process(&mut line);
                    for (i, v) in line.iter().enumerate() {
                        data[base + i * stride] = *v;
                    }
                }
            }
        }
    }

    /// Signed integer frequency of each grid point along every axis, in FFT
    /// order (`0, 1, .., n/2 - 1, -n/2, .., -1`), flattened row-major as
    /// the sum of squares over axes.
    pub fn squared_frequencies(&self, scale: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for (axis, &n) in self.dims.iter().enumerate() {
            let stride: usize = self.dims[axis + 1..].iter().product();
            for (idx, v) in out.iter_mut().enumerate() {
                let k = (idx / stride) % n;
                let signed = if k < n.div_ceil(2) {
                    k as f64
                } else {
                    k as f64 - n as f64
                };
                let xi = signed * scale;
                *v += xi * xi;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft2(data: &[Complex64], n0: usize, n1: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); n0 * n1];
        for k0 in 0..n0 {
            for k1 in 0..n1 {
                let mut acc = Complex64::new(0.0, 0.0);
                for j0 in 0..n0 {
                    for j1 in 0..n1 {
                        let phase = -2.0
                            * std::f64::consts::PI
                            * ((k0 * j0) as f64 / n0 as f64 + (k1 * j1) as f64 / n1 as f64);
                        acc += data[j0 * n1 + j1] * Complex64::from_polar(1.0, phase);
                    }
                }
                out[k0 * n1 + k1] = acc;
            }
        }
        out
    }

    #[test]
    fn two_dimensional_transform_matches_naive_dft() {
        let (n0, n1) = (4, 6);
        let data: Vec<Complex64> = (0..n0 * n1)
            .map(|i| Complex64::new((i as f64).sin(), (3.0 * i as f64).cos()))
            .collect();
        let grid = FftGrid::new(&[n0, n1]);
        let mut fast = data.clone();
        grid.forward(&mut fast);
        let slow = naive_dft2(&data, n0, n1);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).norm() < 1e-10);
        }
        grid.inverse(&mut fast);
        for (a, b) in fast.iter().zip(&data) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn frequencies_are_signed() {
        let grid = FftGrid::new(&[4]);
        assert_eq!(grid.squared_frequencies(1.0), vec![0.0, 1.0, 4.0, 1.0]);
        let grid = FftGrid::new(&[2, 2]);
        assert_eq!(grid.squared_frequencies(0.5), vec![0.0, 0.25, 0.25, 0.5]);
    }
}
