//! First-order envelope statistics, sliding-window parametric images and
//! correlation-based resolution cell measurement.

mod correlation;
mod moments;
mod nakagami;
mod parametric;
pub mod special;

pub use correlation::{autocovariance_fwhm, correlation_cell_size, MIN_CORRELATION_DIM};
pub use moments::{patch_skewness, patch_snr};
pub use nakagami::{nakagami_ml, nakagami_moments, solve_gamma_shape, NakagamiEstimate, NakagamiMethod};
pub use parametric::{
    parametric_image, window_map, ParametricImage, Statistic, WindowSpec, DEFAULT_MIN_CELL_MULTIPLE, MIN_WINDOW_SAMPLES,
};
