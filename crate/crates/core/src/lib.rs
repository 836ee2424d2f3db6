//! Speckle phantom synthesis and envelope statistics for quantitative
//! ultrasound.
//!
//! The pipeline draws binary region masks, fills them with Bernoulli-Gaussian
//! scatterers, convolves with a Gaussian-modulated PSF, detects the envelope
//! and measures first-order statistics (SNR, skewness, Nakagami m and Ω)
//! over sliding windows. A reference-phantom classifier labels windows as
//! under-developed, fully developed or periodic speckle, and the `dataset`
//! module writes reproducible QUSD training sets.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the bottom of this file name the common instantiations.

// `!(x > 0)` is used on purpose so NaN takes the error path.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod dataset;
pub mod error;
mod fft;
pub mod grid;
pub mod phantom;
pub mod scalar;
pub mod seed;
pub mod sim;
pub mod stats;

pub use classify::{
    build_reference_profile, reference_classify, summarize_homogeneous, ClassMap, HomogeneousSummary, ReferenceProfile,
    SpeckleClass, DEFAULT_TOLERANCE,
};
pub use error::{Error, ErrorKind, Result};
pub use fft::next_fast_len;
pub use grid::{GridSpec, ResolutionCell, MIN_GRID_DIM};
pub use phantom::{
    generate_region_masks, sample_scatterer_map, AssignmentRanges, RegionAssignment, RegionMasks, ScattererMap,
    ShapeConfig,
};
pub use scalar::Real;
pub use sim::{
    build_psf, detect_envelope, log_compress, simulate_homogeneous, simulate_rf, BmodeFrame, EnvelopeFrame,
    ImagingParams, ParamRanges, Psf, RfFrame,
};
pub use stats::{
    correlation_cell_size, nakagami_ml, nakagami_moments, parametric_image, patch_snr, NakagamiEstimate,
    ParametricImage, Statistic, WindowSpec,
};

pub type ScattererMap32 = ScattererMap<f32>;
pub type ScattererMap64 = ScattererMap<f64>;
pub type Psf32 = Psf<f32>;
pub type Psf64 = Psf<f64>;
pub type RfFrame32 = RfFrame<f32>;
pub type RfFrame64 = RfFrame<f64>;
pub type EnvelopeFrame32 = EnvelopeFrame<f32>;
pub type EnvelopeFrame64 = EnvelopeFrame<f64>;
pub type BmodeFrame32 = BmodeFrame<f32>;
pub type BmodeFrame64 = BmodeFrame<f64>;
pub type ParametricImage32 = ParametricImage<f32>;
pub type ParametricImage64 = ParametricImage<f64>;
pub type NakagamiEstimate32 = NakagamiEstimate<f32>;
pub type NakagamiEstimate64 = NakagamiEstimate<f64>;
