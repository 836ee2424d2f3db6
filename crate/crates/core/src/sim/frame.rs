use ndarray::Array2;

use crate::grid::GridSpec;
use crate::sim::ImagingParams;

/// Radio-frequency echo samples.
#[derive(Debug, Clone, PartialEq)]
pub struct RfFrame<T> {
    pub data: Array2<T>,
    pub grid: GridSpec,
    pub params: ImagingParams,
}

/// Envelope amplitude `A >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeFrame<T> {
    pub data: Array2<T>,
    pub grid: GridSpec,
    pub params: ImagingParams,
}

/// Log-compressed envelope in dB, within `[-dynamic_range_db, 0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BmodeFrame<T> {
    pub data: Array2<T>,
    pub grid: GridSpec,
    pub params: ImagingParams,
    pub dynamic_range_db: f64,
}
