use ndarray::{Array2, ArrayView2};
use rustfft::num_complex::Complex;

use crate::error::{Error, Result};
use crate::fft::{next_fast_len, Fft2};
use crate::scalar::Real;

/// Same-size 2-D convolution with zero padding, via a cached kernel
/// spectrum. Output pixel `(i, j)` is centred on input pixel `(i, j)` with
/// the kernel origin at `(ka / 2, kl / 2)`.
pub struct Convolver<T: Real> {
    image_dim: (usize, usize),
    kernel_center: (usize, usize),
    padded: (usize, usize),
    fft: Fft2<T>,
    kernel_spectrum: Vec<Complex<T>>,
}

impl<T: Real> Convolver<T> {
    pub fn new(kernel: ArrayView2<T>, image_dim: (usize, usize)) -> Self {
        let (ka, kl) = kernel.dim();
        let padded =
            (next_fast_len(image_dim.0 + ka.saturating_sub(1)), next_fast_len(image_dim.1 + kl.saturating_sub(1)));
        let fft = Fft2::new(padded.0, padded.1);
        let mut buf = vec![Complex::new(T::zero(), T::zero()); padded.0 * padded.1];
        for ((i, j), &v) in kernel.indexed_iter() {
            buf[i * padded.1 + j] = Complex::new(v, T::zero());
        }
        let kernel_spectrum = fft.forward(buf);
        Convolver { image_dim, kernel_center: (ka / 2, kl / 2), padded, fft, kernel_spectrum }
    }

    pub fn convolve(&self, image: ArrayView2<T>) -> Result<Array2<T>> {
        if image.dim() != self.image_dim {
            return Err(Error::Config(format!("convolver planned for {:?}, got {:?}", self.image_dim, image.dim())));
        }
        let (pa, pl) = self.padded;
        let mut buf = vec![Complex::new(T::zero(), T::zero()); pa * pl];
        for ((i, j), &v) in image.indexed_iter() {
            buf[i * pl + j] = Complex::new(v, T::zero());
        }
        let mut spec = self.fft.forward(buf);
        for (s, k) in spec.iter_mut().zip(&self.kernel_spectrum) {
            *s = *s * *k;
        }
        let full = self.fft.inverse(spec);
        let scale = T::one() / T::from_usize_lossy(pa * pl);
        let (ca, cl) = self.kernel_center;
        Ok(Array2::from_shape_fn(self.image_dim, |(i, j)| full[(i + ca) * pl + j + cl].re * scale))
    }
}

pub fn fft_convolve_same<T: Real>(image: ArrayView2<T>, kernel: ArrayView2<T>) -> Array2<T> {
    Convolver::new(kernel, image.dim()).convolve(image).expect("convolver planned for this image")
}

/// Brute-force reference for [`fft_convolve_same`].
pub fn direct_convolve_same<T: Real>(image: ArrayView2<T>, kernel: ArrayView2<T>) -> Array2<T> {
    let (na, nl) = image.dim();
    let (ka, kl) = kernel.dim();
    let (ca, cl) = (ka / 2, kl / 2);
    Array2::from_shape_fn((na, nl), |(i, j)| {
        let mut acc = T::zero();
        for u in 0..ka {
            let Some(src_i) = (i + ca).checked_sub(u).filter(|&s| s < na) else { continue };
            for v in 0..kl {
                let Some(src_j) = (j + cl).checked_sub(v).filter(|&s| s < nl) else { continue };
                acc = acc + image[[src_i, src_j]] * kernel[[u, v]];
            }
        }
        acc
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn impulse_reproduces_kernel() {
        let kernel = array![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0], [7.0, 8.0, 9.0f64]];
        let mut img = Array2::zeros((9, 8));
        img[[4, 3]] = 1.0;
        let out = fft_convolve_same(img.view(), kernel.view());
        for u in 0..3 {
            for v in 0..3 {
                assert!((out[[3 + u, 2 + v]] - kernel[[u, v]]).abs() < 1e-12);
            }
        }
        assert!((out.sum() - kernel.sum()).abs() < 1e-10);
    }

    #[test]
    fn asymmetric_kernel_matches_direct() {
        let kernel = array![[0.0, 1.0], [2.0, -1.0], [0.5, 3.0f64]];
        let img = Array2::from_shape_fn((7, 6), |(i, j)| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let a = fft_convolve_same(img.view(), kernel.view());
        let b = direct_convolve_same(img.view(), kernel.view());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn wrong_dimensions_rejected() {
        let conv = Convolver::<f64>::new(Array2::ones((3, 3)).view(), (8, 8));
        assert!(conv.convolve(Array2::zeros((8, 9)).view()).is_err());
    }
}
