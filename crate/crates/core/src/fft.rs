//! 2-D FFT plumbing over `rustfft`.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::scalar::Real;

/// Smallest `m >= n` whose prime factors are all in {2, 3, 5, 7}.
pub fn next_fast_len(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5, 7] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

pub(crate) fn transpose<T: Copy + Send + Sync>(src: &[T], rows: usize, cols: usize) -> Vec<T> {
    const BLOCK: usize = 16;
    debug_assert_eq!(src.len(), rows * cols);
    let mut dst = src.to_vec();
    if rows == 0 || cols == 0 {
        return dst;
    }
    dst.par_chunks_mut(rows * BLOCK).enumerate().for_each(|(b, out)| {
        let c0 = b * BLOCK;
        let nc = out.len() / rows;
        for r in 0..rows {
            let strip = &src[r * cols + c0..r * cols + c0 + nc];
            for (dc, &v) in strip.iter().enumerate() {
                out[dc * rows + r] = v;
            }
        }
    });
    dst
}

fn process_rows<T: Real>(fft: &Arc<dyn Fft<T>>, buf: &mut [Complex<T>]) {
    let len = fft.len();
    let scratch_len = fft.get_inplace_scratch_len();
    buf.par_chunks_mut(len * 8).for_each_init(
        || vec![Complex::new(T::zero(), T::zero()); scratch_len],
        |scratch, rows| fft.process_with_scratch(rows, scratch),
    );
}

/// Planned forward/inverse transforms of a `rows x cols` grid.
///
/// `forward` takes row-major data and returns the spectrum in transposed
/// (column-major) layout; `inverse` takes that layout back. The pair is
/// unnormalised: `inverse(forward(x)) = rows * cols * x`.
pub(crate) struct Fft2<T: Real> {
    rows: usize,
    cols: usize,
    row_fwd: Arc<dyn Fft<T>>,
    row_inv: Arc<dyn Fft<T>>,
    col_fwd: Arc<dyn Fft<T>>,
    col_inv: Arc<dyn Fft<T>>,
}

impl<T: Real> Fft2<T> {
    pub fn new(rows: usize, cols: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            rows,
            cols,
            row_fwd: planner.plan_fft_forward(cols),
            row_inv: planner.plan_fft_inverse(cols),
            col_fwd: planner.plan_fft_forward(rows),
            col_inv: planner.plan_fft_inverse(rows),
        }
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn forward(&self, mut buf: Vec<Complex<T>>) -> Vec<Complex<T>> {
        debug_assert_eq!(buf.len(), self.len());
        process_rows(&self.row_fwd, &mut buf);
        let mut t = transpose(&buf, self.rows, self.cols);
        process_rows(&self.col_fwd, &mut t);
        t
    }

    pub fn inverse(&self, mut spec: Vec<Complex<T>>) -> Vec<Complex<T>> {
        debug_assert_eq!(spec.len(), self.len());
        process_rows(&self.col_inv, &mut spec);
        let mut buf = transpose(&spec, self.cols, self.rows);
        process_rows(&self.row_inv, &mut buf);
        buf
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_lengths() {
        assert_eq!(next_fast_len(1), 1);
        assert_eq!(next_fast_len(11), 12);
        assert_eq!(next_fast_len(2192), 2205);
        assert_eq!(next_fast_len(280), 280);
        assert_eq!(next_fast_len(4096), 4096);
    }

    #[test]
    fn transpose_round_trip() {
        let v: Vec<u32> = (0..37 * 70).collect();
        let t = transpose(&v, 37, 70);
        assert_eq!(t[5 * 37 + 3], v[3 * 70 + 5]);
        assert_eq!(transpose(&t, 70, 37), v);
    }

    #[test]
    fn fft2_inverse_scales_by_len() {
        let (r, c) = (12, 20);
        let x: Vec<Complex<f64>> = (0..r * c).map(|i| Complex::new((i as f64).sin(), 0.0)).collect();
        let fft = Fft2::new(r, c);
        let back = fft.inverse(fft.forward(x.clone()));
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b / (r * c) as f64).norm() < 1e-12);
        }
    }
}
