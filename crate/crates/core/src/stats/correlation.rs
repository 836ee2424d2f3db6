use ndarray::ArrayView2;
use rustfft::num_complex::Complex;

use crate::error::{Error, Result};
use crate::fft::{next_fast_len, Fft2};
use crate::grid::ResolutionCell;
use crate::scalar::Real;
use crate::sim::EnvelopeFrame;

pub const MIN_CORRELATION_DIM: usize = 128;

/// Full widths at half maximum of the normalised autocovariance along the
/// axial and lateral axes, in pixels.
pub fn autocovariance_fwhm<T: Real>(data: ArrayView2<T>) -> Result<(f64, f64)> {
    let (na, nl) = data.dim();
    let n = (na * nl) as f64;
    let mean = data.iter().map(|v| v.as_f64()).sum::<f64>() / n;
    let (pa, pl) = (next_fast_len(2 * na), next_fast_len(2 * nl));
    let fft = Fft2::<f64>::new(pa, pl);
    let mut buf = vec![Complex::new(0.0, 0.0); pa * pl];
    for ((i, j), v) in data.indexed_iter() {
        buf[i * pl + j] = Complex::new(v.as_f64() - mean, 0.0);
    }
    let mut spec = fft.forward(buf);
    for s in spec.iter_mut() {
        *s = Complex::new(s.norm_sqr(), 0.0);
    }
    let acov = fft.inverse(spec);
    let zero = acov[0].re;
    if !(zero > 1e-300 * n) || !zero.is_finite() {
        return Err(Error::DegenerateVariance("frame has zero variance"));
    }
    let axial: Vec<f64> = (0..na).map(|k| acov[k * pl].re / zero).collect();
    let lateral: Vec<f64> = (0..nl).map(|k| acov[k].re / zero).collect();
    Ok((2.0 * half_max_lag(&axial)?, 2.0 * half_max_lag(&lateral)?))
}

/// First lag at which a normalised profile reaches 0.5, interpolated
/// linearly between samples.
fn half_max_lag(profile: &[f64]) -> Result<f64> {
    let k = profile
        .iter()
        .position(|&r| r < 0.5)
        .ok_or(Error::DegenerateVariance("autocovariance never falls to half maximum"))?;
    let (r0, r1) = (profile[k - 1], profile[k]);
    Ok((k - 1) as f64 + (r0 - 0.5) / (r0 - r1))
}

/// Resolution cell measured from the envelope's autocovariance.
pub fn correlation_cell_size<T: Real>(env: &EnvelopeFrame<T>) -> Result<ResolutionCell> {
    let (na, nl) = env.data.dim();
    if na < MIN_CORRELATION_DIM || nl < MIN_CORRELATION_DIM {
        return Err(Error::Config(format!(
            "correlation cell needs at least {MIN_CORRELATION_DIM}x{MIN_CORRELATION_DIM} samples, got {na}x{nl}"
        )));
    }
    let (fa, fl) = autocovariance_fwhm(env.data.view())?;
    Ok(ResolutionCell { axial_mm: fa * env.grid.d_axial, lateral_mm: fl * env.grid.d_lateral })
}
