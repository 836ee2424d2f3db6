//! Reference-phantom classification.
//!
//! Each window's envelope SNR is compared with the mean SNR of a
//! high-density reference at the same depth (window row). Inside the
//! relative tolerance band the window is fully developed speckle; below it,
//! under-developed; above it, non-resolved periodicity.

use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ResolutionCell;
use crate::scalar::Real;
use crate::sim::EnvelopeFrame;
use crate::stats::{parametric_image, ParametricImage, Statistic, WindowSpec};

pub const DEFAULT_TOLERANCE: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
#[repr(u8)]
pub enum SpeckleClass {
    /// Under-developed speckle.
    Uds = 0,
    /// Fully developed speckle.
    Fds = 1,
    /// Non-resolved periodicity (coherent scattering).
    Periodic = 2,
}

impl SpeckleClass {
    pub const ALL: [SpeckleClass; 3] = [SpeckleClass::Uds, SpeckleClass::Fds, SpeckleClass::Periodic];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    /// Applies the tolerance band. Equality with the band edge is FDS; a
    /// NaN SNR (window without measurable speckle) is UDS.
    pub fn decide(snr: f64, reference: f64, tolerance: f64) -> Self {
        if (snr - reference).abs() <= tolerance * reference {
            SpeckleClass::Fds
        } else if snr > reference {
            SpeckleClass::Periodic
        } else {
            SpeckleClass::Uds
        }
    }
}

/// Per-depth reference SNR, averaged over frames and lateral positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceProfile {
    pub snr_by_depth: Vec<f64>,
    /// Lateral standard deviation of each row of the frame-averaged SNR map.
    pub dispersion_by_depth: Vec<f64>,
    pub frames_used: usize,
    pub window: WindowSpec,
    /// Window columns of the maps the profile was built from.
    pub columns: usize,
}

impl ReferenceProfile {
    /// Builds the profile from per-frame SNR parametric images.
    pub fn from_snr_images<T: Real>(maps: &[ParametricImage<T>]) -> Result<Self> {
        let first = maps.first().ok_or_else(|| Error::Config("reference needs at least one frame".into()))?;
        for m in maps {
            if m.statistic != Statistic::Snr {
                return Err(Error::Config(format!("reference maps must be SNR, got {:?}", m.statistic)));
            }
            if !first.is_compatible(m) {
                return Err(Error::Config(format!(
                    "reference frames differ: {:?} on {:?} vs {:?} on {:?}",
                    first.window,
                    first.values.dim(),
                    m.window,
                    m.values.dim()
                )));
            }
        }
        let (rows, cols) = first.values.dim();
        let mut snr_by_depth = Vec::with_capacity(rows);
        let mut dispersion_by_depth = Vec::with_capacity(rows);
        // frame-averaged map, then per-row statistics across columns
        let mut sum = Array2::<f64>::zeros((rows, cols));
        let mut count = Array2::<u32>::zeros((rows, cols));
        for m in maps {
            for ((idx, &v), c) in m.values.indexed_iter().zip(count.iter_mut()) {
                let v = v.as_f64();
                if v.is_finite() {
                    sum[idx] += v;
                    *c += 1;
                }
            }
        }
        for r in 0..rows {
            let vals: Vec<f64> =
                (0..cols).filter(|&c| count[[r, c]] > 0).map(|c| sum[[r, c]] / f64::from(count[[r, c]])).collect();
            if vals.is_empty() {
                return Err(Error::DegenerateInput(format!("reference row {r} has no valid SNR")));
            }
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            if !(mean > 0.0) {
                return Err(Error::DegenerateInput(format!("reference row {r} has non-positive SNR")));
            }
            snr_by_depth.push(mean);
            dispersion_by_depth.push(var.sqrt());
        }
        Ok(ReferenceProfile {
            snr_by_depth,
            dispersion_by_depth,
            frames_used: maps.len(),
            window: first.window,
            columns: cols,
        })
    }
}

/// Computes SNR maps of `frames` and averages them into a depth profile.
pub fn build_reference_profile<T: Real>(
    frames: &[EnvelopeFrame<T>],
    window: &WindowSpec,
    rescell: Option<&ResolutionCell>,
) -> Result<ReferenceProfile> {
    let first = frames.first().ok_or_else(|| Error::Config("reference needs at least one frame".into()))?;
    if let Some(bad) = frames.iter().find(|f| f.data.dim() != first.data.dim()) {
        return Err(Error::Config(format!(
            "reference frames differ in size: {:?} vs {:?}",
            first.data.dim(),
            bad.data.dim()
        )));
    }
    let maps =
        frames.iter().map(|f| parametric_image(f, window, Statistic::Snr, rescell)).collect::<Result<Vec<_>>>()?;
    ReferenceProfile::from_snr_images(&maps)
}

/// Window labels with their provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassMap {
    pub labels: Array2<SpeckleClass>,
    pub tolerance: f64,
    pub window: WindowSpec,
}

impl ClassMap {
    /// Drops `rows` window rows and `cols` window columns from every edge.
    pub fn central(&self, rows: usize, cols: usize) -> ClassMap {
        let (nr, nc) = self.labels.dim();
        let r1 = nr.saturating_sub(rows).max(rows);
        let c1 = nc.saturating_sub(cols).max(cols);
        ClassMap { labels: self.labels.slice(s![rows..r1, cols..c1]).to_owned(), ..self.clone() }
    }

    pub fn codes(&self) -> Array2<u8> {
        self.labels.mapv(SpeckleClass::code)
    }
}

/// Labels each window of an SNR map against the depth-matched reference.
pub fn reference_classify<T: Real>(
    test_snr: &ParametricImage<T>,
    reference: &ReferenceProfile,
    tolerance: f64,
) -> Result<ClassMap> {
    if test_snr.statistic != Statistic::Snr {
        return Err(Error::Config(format!("classification needs an SNR map, got {:?}", test_snr.statistic)));
    }
    if !(tolerance.is_finite() && tolerance >= 0.0) {
        return Err(Error::Config(format!("tolerance must be non-negative, got {tolerance}")));
    }
    if test_snr.window != reference.window || test_snr.values.nrows() != reference.snr_by_depth.len() {
        return Err(Error::WindowMismatch(format!(
            "test map {:?} with {} rows does not match reference {:?} with {} rows",
            test_snr.window,
            test_snr.values.nrows(),
            reference.window,
            reference.snr_by_depth.len()
        )));
    }
    let labels = Array2::from_shape_fn(test_snr.values.dim(), |(r, c)| {
        SpeckleClass::decide(test_snr.values[[r, c]].as_f64(), reference.snr_by_depth[r], tolerance)
    });
    Ok(ClassMap { labels, tolerance, window: test_snr.window })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogeneousSummary {
    pub windows: usize,
    pub fraction_uds: f64,
    pub fraction_fds: f64,
    pub fraction_periodic: f64,
    pub true_label: SpeckleClass,
    pub accuracy: f64,
}

/// Label fractions of a map over a phantom with a single true class.
pub fn summarize_homogeneous(map: &ClassMap, true_label: SpeckleClass) -> HomogeneousSummary {
    let n = map.labels.len();
    let count = |c: SpeckleClass| map.labels.iter().filter(|&&l| l == c).count();
    let frac = |c: SpeckleClass| if n == 0 { 0.0 } else { count(c) as f64 / n as f64 };
    HomogeneousSummary {
        windows: n,
        fraction_uds: frac(SpeckleClass::Uds),
        fraction_fds: frac(SpeckleClass::Fds),
        fraction_periodic: frac(SpeckleClass::Periodic),
        true_label,
        accuracy: frac(true_label),
    }
}
