use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::stats::special::{digamma, trigamma};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NakagamiMethod {
    Moments,
    MaxLikelihood,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NakagamiEstimate<T> {
    /// Shape parameter.
    pub m: T,
    /// Scale parameter, `E[A²]`.
    pub omega: T,
    pub n: usize,
    pub method: NakagamiMethod,
}

const ML_MAX_ITER: usize = 100;
const ML_STEP_TOL: f64 = 1e-10;

fn check_samples<T: Real>(patch: &[T], strictly_positive: bool) -> Result<()> {
    if patch.len() < 2 {
        return Err(Error::DegenerateInput(format!("need at least 2 samples, got {}", patch.len())));
    }
    for (index, &a) in patch.iter().enumerate() {
        if !a.is_finite() {
            return Err(Error::InvalidSample { index, reason: "not finite" });
        }
        if strictly_positive && a <= T::zero() {
            return Err(Error::InvalidSample { index, reason: "not strictly positive" });
        }
        if a < T::zero() {
            return Err(Error::InvalidSample { index, reason: "negative" });
        }
    }
    Ok(())
}

/// Inverse normalised variance of the intensity: `Ω = E[A²]`,
/// `m = Ω² / Var(A²)`.
pub fn nakagami_moments<T: Real>(patch: &[T]) -> Result<NakagamiEstimate<T>> {
    check_samples(patch, false)?;
    let n = T::from_usize_lossy(patch.len());
    let omega = patch.iter().map(|&a| a * a).sum::<T>() / n;
    let var = patch
        .iter()
        .map(|&a| {
            let d = a * a - omega;
            d * d
        })
        .sum::<T>()
        / n;
    if !(var > T::zero()) {
        return Err(Error::DegenerateVariance("intensity has zero variance"));
    }
    Ok(NakagamiEstimate { m: omega * omega / var, omega, n: patch.len(), method: NakagamiMethod::Moments })
}

/// Maximum-likelihood fit. With `x = A²` Gamma distributed, `Ω = mean(x)`
/// and `m` solves `ln m − ψ(m) = ln mean(x) − mean(ln x)` by Newton's method.
pub fn nakagami_ml<T: Real>(patch: &[T]) -> Result<NakagamiEstimate<T>> {
    check_samples(patch, true)?;
    let n = T::from_usize_lossy(patch.len());
    let omega = patch.iter().map(|&a| a * a).sum::<T>() / n;
    let mean_ln = patch.iter().map(|&a| T::lit(2.0) * a.ln()).sum::<T>() / n;
    let s = omega.ln().as_f64() - mean_ln.as_f64();
    // constant amplitudes leave only rounding noise in the log-moment gap
    if s < 64.0 * f64::EPSILON {
        return Err(Error::DegenerateVariance("amplitudes are constant"));
    }
    let m = solve_gamma_shape(s)?;
    Ok(NakagamiEstimate { m: T::lit(m), omega, n: patch.len(), method: NakagamiMethod::MaxLikelihood })
}

/// Solves `ln m − ψ(m) = s` for `s > 0`.
pub fn solve_gamma_shape(s: f64) -> Result<f64> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::DegenerateVariance("log-moment gap is not positive"));
    }
    // closed-form approximation to the root
    let mut m = (3.0 - s + ((s - 3.0).powi(2) + 24.0 * s).sqrt()) / (12.0 * s);
    for _ in 0..ML_MAX_ITER {
        let f = m.ln() - digamma(m) - s;
        let df = 1.0 / m - trigamma(m);
        let step = f / df;
        let mut next = m - step;
        if !(next > 0.0) {
            next = m / 2.0;
        }
        if !next.is_finite() {
            break;
        }
        let moved = (next - m).abs();
        m = next;
        if moved < ML_STEP_TOL.max(4.0 * f64::EPSILON * m) {
            return Ok(m);
        }
    }
    Err(Error::NoConvergence { iterations: ML_MAX_ITER })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_solver_inverts_the_likelihood_equation() {
        for &m in &[0.2, 0.5, 1.0, 2.0, 7.5, 150.0] {
            let s = f64::ln(m) - digamma(m);
            let got = solve_gamma_shape(s).unwrap();
            assert!(((got - m) / m).abs() < 1e-9, "m={m} got={got}");
        }
    }

    #[test]
    fn zero_sample_is_invalid_for_ml() {
        let mut xs = vec![1.0f64; 100];
        xs[3] = 0.5;
        xs[17] = 0.0;
        assert!(matches!(nakagami_ml(&xs), Err(Error::InvalidSample { index: 17, .. })));
        assert!(nakagami_moments(&xs).is_ok());
    }

    #[test]
    fn constant_intensity_is_degenerate() {
        assert!(matches!(nakagami_moments(&[1.0f64, -1.0, 1.0, 1.0]), Err(Error::InvalidSample { .. })));
        assert!(matches!(nakagami_moments(&[1.0f64, 1.0, 1.0, 1.0]), Err(Error::DegenerateVariance(_))));
        assert!(matches!(nakagami_ml(&[2.0f64; 64]), Err(Error::DegenerateVariance(_))));
    }
}
