use crate::error::{Error, Result};
use crate::scalar::Real;

/// Mean and population variance, two-pass.
pub(crate) fn mean_var<T: Real>(patch: &[T]) -> Result<(T, T)> {
    if patch.len() < 2 {
        return Err(Error::DegenerateInput(format!("need at least 2 samples, got {}", patch.len())));
    }
    let n = T::from_usize_lossy(patch.len());
    let mean = patch.iter().copied().sum::<T>() / n;
    let var = patch.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / n;
    if !mean.is_finite() || !var.is_finite() {
        return Err(Error::DegenerateInput("non-finite samples".into()));
    }
    Ok((mean, var))
}

/// Echo amplitude SNR: mean over population standard deviation.
pub fn patch_snr<T: Real>(patch: &[T]) -> Result<T> {
    let (mean, var) = mean_var(patch)?;
    if var <= T::zero() {
        return Err(Error::DegenerateVariance("patch has zero variance"));
    }
    Ok(mean / var.sqrt())
}

/// Third standardised central moment.
pub fn patch_skewness<T: Real>(patch: &[T]) -> Result<T> {
    let (mean, var) = mean_var(patch)?;
    if var <= T::zero() {
        return Err(Error::DegenerateVariance("patch has zero variance"));
    }
    let n = T::from_usize_lossy(patch.len());
    let m3 = patch
        .iter()
        .map(|&x| {
            let d = x - mean;
            d * d * d
        })
        .sum::<T>()
        / n;
    Ok(m3 / (var * var.sqrt()))
}
