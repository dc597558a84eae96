//! Multi-dimensional complex FFT over row-major arrays.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub struct FftNd {
    dims: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl FftNd {
    pub fn new(dims: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        FftNd {
            dims: dims.to_vec(),
            forward: dims.iter().map(|&d| planner.plan_fft_forward(d)).collect(),
            inverse: dims.iter().map(|&d| planner.plan_fft_inverse(d)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        for axis in 0..self.dims.len() {
            self.axis(data, axis, &self.forward[axis]);
        }
    }

    /// Unnormalized inverse; divide by [`FftNd::len`] to undo [`FftNd::forward`].
    pub fn inverse(&self, data: &mut [Complex64]) {
        for axis in 0..self.dims.len() {
            self.axis(data, axis, &self.inverse[axis]);
        }
    }

    fn axis(&self, data: &mut [Complex64], axis: usize, fft: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len(), self.len());
        let c = self.dims[axis];
        if c == 1 {
            return;
        }
        let inner: usize = self.dims[axis + 1..].iter().product();
        let rows_per_task = (4096 / c).max(1);
        let run_rows = |rows: &mut [Complex64]| {
            let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
            fft.process_with_scratch(rows, &mut scratch);
        };
        if inner == 1 {
            data.par_chunks_mut(c * rows_per_task).for_each(run_rows);
            return;
        }
        let block = c * inner;
        let mut buf = vec![Complex64::default(); block];
        for chunk in data.chunks_mut(block) {
            // [c][inner] -> [inner][c]
            buf.par_chunks_mut(c).enumerate().for_each(|(j, row)| {
                for (i, x) in row.iter_mut().enumerate() {
                    *x = chunk[i * inner + j];
                }
            });
            buf.par_chunks_mut(c * rows_per_task).for_each(run_rows);
            chunk
                .par_chunks_mut(inner)
                .enumerate()
                .for_each(|(i, row)| {
                    for (j, x) in row.iter_mut().enumerate() {
                        *x = buf[j * c + i];
                    }
                });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft_2d(x: &[Complex64], d0: usize, d1: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); d0 * d1];
        for k0 in 0..d0 {
            for k1 in 0..d1 {
                let mut s = Complex64::default();
                for n0 in 0..d0 {
                    for n1 in 0..d1 {
                        let ph = -2.0
                            * std::f64::consts::PI
                            * ((k0 * n0) as f64 / d0 as f64 + (k1 * n1) as f64 / d1 as f64);
                        s += x[n0 * d1 + n1] * Complex64::from_polar(1.0, ph);
                    }
                }
                out[k0 * d1 + k1] = s;
            }
        }
        out
    }

    #[test]
    fn matches_naive_transform() {
        let (d0, d1) = (6, 10);
        let x: Vec<Complex64> = (0..d0 * d1)
            .map(|i| Complex64::new((i as f64 * 0.7).sin(), (i as f64 * 0.3).cos()))
            .collect();
        let mut y = x.clone();
        let f = FftNd::new(&[d0, d1]);
        f.forward(&mut y);
        let z = naive_dft_2d(&x, d0, d1);
        for (a, b) in y.iter().zip(&z) {
            assert!((a - b).norm() < 1e-12);
        }
        f.inverse(&mut y);
        for (a, b) in y.iter().zip(&x) {
            assert!((a / (d0 * d1) as f64 - b).norm() < 1e-14);
        }
    }

    #[test]
    fn three_axes_round_trip() {
        let dims = [4, 8, 16];
        let x: Vec<Complex64> = (0..512)
            .map(|i| Complex64::new(i as f64, -(i as f64)))
            .collect();
        let mut y = x.clone();
        let f = FftNd::new(&dims);
        f.forward(&mut y);
        // DC term is the plain sum.
        let s: Complex64 = x.iter().sum();
        assert!((y[0] - s).norm() < 1e-9);
        f.inverse(&mut y);
        for (a, b) in y.iter().zip(&x) {
            assert!((a / 512.0 - b).norm() < 1e-10);
        }
    }
}
