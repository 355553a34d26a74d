//! Multi-axis FFTs on row-major grids.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Signed wavenumber of FFT index `i` on an axis of length `n`; `None` for the Nyquist index.
pub fn wavenumber(i: usize, n: usize) -> Option<i64> {
    if n % 2 == 0 && i == n / 2 {
        None
    } else if i <= n / 2 {
        Some(i as i64)
    } else {
        Some(i as i64 - n as i64)
    }
}

/// Row-major grid of arbitrary rank with cached forward and inverse plans per axis.
pub struct GridFft {
    shape: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl GridFft {
    pub fn new(shape: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        let forward = shape.iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse = shape.iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        Self { shape: shape.to_vec(), forward, inverse }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn run(&self, data: &mut [Complex64], axes: &[usize], inverse: bool) {
        let total = self.len();
        debug_assert_eq!(data.len(), total);
        for &axis in axes {
            let n = self.shape[axis];
            let stride: usize = self.shape[axis + 1..].iter().product();
            let plan = if inverse { &self.inverse[axis] } else { &self.forward[axis] };
            if stride == 1 {
                plan.process(data);
            } else {
                let mut line = vec![Complex64::new(0.0, 0.0); n];
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
            if inverse {
                let scale = 1.0 / n as f64;
                data.iter_mut().for_each(|z| *z *= scale);
            }
        }
    }

    pub fn forward_axes(&self, data: &mut [Complex64], axes: &[usize]) {
        self.run(data, axes, false);
    }

    /// Normalized inverse transform along `axes`.
    pub fn inverse_axes(&self, data: &mut [Complex64], axes: &[usize]) {
        self.run(data, axes, true);
    }

    pub fn forward_real(&self, data: &[f64]) -> Vec<Complex64> {
        let mut c: Vec<Complex64> = data.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let axes: Vec<usize> = (0..self.shape.len()).collect();
        self.forward_axes(&mut c, &axes);
        c
    }

    pub fn inverse_to_real(&self, mut spec: Vec<Complex64>) -> Vec<f64> {
        let axes: Vec<usize> = (0..self.shape.len()).collect();
        self.inverse_axes(&mut spec, &axes);
        spec.into_iter().map(|z| z.re).collect()
    }
}
