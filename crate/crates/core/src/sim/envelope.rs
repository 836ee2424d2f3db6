use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sim::{BmodeFrame, EnvelopeFrame, RfFrame};

pub const DEFAULT_DYNAMIC_RANGE_DB: f64 = 50.0;

/// Modulus of the analytic signal of every column (axial line).
///
/// The analytic signal is built from the one-sided spectrum: DC and Nyquist
/// bins kept, positive frequencies doubled, negative frequencies zeroed.
pub fn analytic_envelope<T: Real>(rf: ArrayView2<T>) -> Array2<T> {
    let (na, nl) = rf.dim();
    if na == 0 || nl == 0 {
        return Array2::zeros((na, nl));
    }
    let mut planner = FftPlanner::<T>::new();
    let fwd = planner.plan_fft_forward(na);
    let inv = planner.plan_fft_inverse(na);
    let two = T::lit(2.0);
    let scale = T::one() / T::from_usize_lossy(na);
    let zero = Complex::new(T::zero(), T::zero());

    let columns: Vec<Vec<T>> = (0..nl)
        .into_par_iter()
        .map_init(
            || vec![zero; fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len())],
            |scratch, j| {
                let mut buf: Vec<Complex<T>> = rf.column(j).iter().map(|&v| Complex::new(v, T::zero())).collect();
                fwd.process_with_scratch(&mut buf, scratch);
                let half = na / 2;
                for (k, b) in buf.iter_mut().enumerate() {
                    let keep = k == 0 || (na % 2 == 0 && k == half);
                    if keep {
                        continue;
                    }
                    if k < na.div_ceil(2) {
                        *b = *b * two;
                    } else {
                        *b = zero;
                    }
                }
                inv.process_with_scratch(&mut buf, scratch);
                buf.iter().map(|c| c.norm() * scale).collect()
            },
        )
        .collect();

    let mut out = Array2::zeros((na, nl));
    for (j, col) in columns.into_iter().enumerate() {
        out.column_mut(j).assign(&ndarray::ArrayView1::from(&col[..]));
    }
    out
}

pub fn detect_envelope<T: Real>(rf: &RfFrame<T>) -> EnvelopeFrame<T> {
    EnvelopeFrame { data: analytic_envelope(rf.data.view()), grid: rf.grid, params: rf.params }
}

/// `20 log10(A / max A)` clamped to `[-dynamic_range_db, 0]`.
pub fn log_compress<T: Real>(env: &EnvelopeFrame<T>, dynamic_range_db: f64) -> Result<BmodeFrame<T>> {
    if !(dynamic_range_db.is_finite() && dynamic_range_db > 0.0) {
        return Err(Error::Config(format!("dynamic range must be positive, got {dynamic_range_db}")));
    }
    let max = env.data.iter().copied().fold(T::zero(), T::max);
    if !(max > T::zero()) || !max.is_finite() {
        return Err(Error::DegenerateInput("envelope has no positive maximum".into()));
    }
    let floor = T::lit(-dynamic_range_db);
    let twenty = T::lit(20.0);
    let data = env.data.mapv(|a| {
        let db = twenty * (a / max).log10();
        if db.is_nan() {
            floor
        } else {
            db.max(floor).min(T::zero())
        }
    });
    Ok(BmodeFrame { data, grid: env.grid, params: env.params, dynamic_range_db })
}
