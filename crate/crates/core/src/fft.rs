//! Separable n-dimensional transforms on periodic grids.

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::torus::TorusGrid;

pub(crate) struct GridFft {
    n: usize,
    dim: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl GridFft {
    pub(crate) fn new(grid: &TorusGrid) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n: grid.n(),
            dim: grid.dim(),
            forward: planner.plan_fft_forward(grid.n()),
            inverse: planner.plan_fft_inverse(grid.n()),
        }
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        // axis 0 is contiguous
        for line in data.chunks_exact_mut(n) {
            plan.process_with_scratch(line, &mut scratch);
        }
        let mut buf = vec![Complex64::default(); n];
        let total = data.len();
        let mut stride = n;
        for _ in 1..self.dim {
            let block = stride * n;
            for start in (0..total).step_by(block) {
                for offset in 0..stride {
                    let base = start + offset;
                    for (k, b) in buf.iter_mut().enumerate() {
                        *b = data[base + k * stride];
                    }
                    plan.process_with_scratch(&mut buf, &mut scratch);
                    for (k, b) in buf.iter().enumerate() {
                        data[base + k * stride] = *b;
                    }
                }
            }
            stride = block;
        }
    }

    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// Unnormalized inverse; divide by the cell count to invert [`Self::forward`].
    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
    }
}

/// `out[z] = sum_x a[x + z] b[x]` on the periodic grid.
pub(crate) fn circular_correlation(grid: &TorusGrid, a: &[f64], b: &[f64]) -> Vec<f64> {
    let fft = GridFft::new(grid);
    let mut fa: Vec<Complex64> = a.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft.forward(&mut fa);
    let same = std::ptr::eq(a, b);
    if same {
        for v in fa.iter_mut() {
            *v = Complex64::new(v.norm_sqr(), 0.0);
        }
    } else {
        let mut fb: Vec<Complex64> = b.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        fft.forward(&mut fb);
        for (x, y) in fa.iter_mut().zip(&fb) {
            *x *= y.conj();
        }
    }
    fft.inverse(&mut fa);
    let scale = 1.0 / grid.len() as f64;
    fa.into_iter().map(|v| v.re * scale).collect()
}

/// `out[x] = sum_z a[z] b[x + z]`, i.e. the correlation of `b` against the weights `a`.
pub(crate) fn weighted_sum_field(grid: &TorusGrid, weights: &[f64], b: &[f64]) -> Vec<f64> {
    circular_correlation(grid, b, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn correlation_matches_direct_sum() {
        for dim in [2, 3] {
            let g = TorusGrid::new(dim, 16).unwrap();
            let a: Vec<f64> = (0..g.len()).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
            let b: Vec<f64> = (0..g.len()).map(|i| ((i * 104729) % 5) as f64).collect();
            let fast = circular_correlation(&g, &a, &b);
            for z in [0usize, 1, 17, 200, g.len() - 1] {
                let zc = g.signed_offset(z);
                let mut s = 0.0;
                for x in 0..g.len() {
                    let xc = g.coords(x);
                    s += a[g.shifted_index(&xc[..dim], &zc[..dim])] * b[x];
                }
                assert!((fast[z] - s).abs() < 1e-9, "dim {dim} z {z}: {} vs {s}", fast[z]);
            }
        }
    }
}
