use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ResolutionCell};
use crate::scalar::Real;
use crate::sim::EnvelopeFrame;
use crate::stats::{nakagami_ml, patch_skewness, patch_snr};

pub const DEFAULT_MIN_CELL_MULTIPLE: f64 = 8.0;
pub const MIN_WINDOW_SAMPLES: usize = 64;

/// Sliding window geometry in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub height: usize,
    pub width: usize,
    pub stride_a: usize,
    pub stride_l: usize,
    /// Minimum number of resolution cells (by area) inside one window.
    pub min_cell_multiple: f64,
}

impl WindowSpec {
    /// Window with stride of a quarter window and the default cell multiple.
    pub fn new(height: usize, width: usize) -> Self {
        WindowSpec {
            height,
            width,
            stride_a: (height / 4).max(1),
            stride_l: (width / 4).max(1),
            min_cell_multiple: DEFAULT_MIN_CELL_MULTIPLE,
        }
    }

    pub fn with_stride(mut self, stride_a: usize, stride_l: usize) -> Self {
        self.stride_a = stride_a;
        self.stride_l = stride_l;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.height * self.width < MIN_WINDOW_SAMPLES {
            return Err(Error::Config(format!(
                "window {}x{} holds fewer than {MIN_WINDOW_SAMPLES} samples",
                self.height, self.width
            )));
        }
        if self.stride_a == 0 || self.stride_l == 0 {
            return Err(Error::Config("window strides must be at least 1".into()));
        }
        if !(self.min_cell_multiple.is_finite() && self.min_cell_multiple >= 0.0) {
            return Err(Error::Config("min_cell_multiple must be non-negative".into()));
        }
        Ok(())
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    /// Number of window positions along each axis for a source of `dim`.
    pub fn output_dim(&self, (na, nl): (usize, usize)) -> Result<(usize, usize)> {
        if self.height > na || self.width > nl {
            return Err(Error::Config(format!("window {}x{} exceeds source {na}x{nl}", self.height, self.width)));
        }
        Ok(((na - self.height) / self.stride_a + 1, (nl - self.width) / self.stride_l + 1))
    }

    /// Rejects windows holding fewer than `min_cell_multiple` elliptical
    /// resolution cells.
    pub fn check_cells(&self, cell: &ResolutionCell, grid: &GridSpec) -> Result<()> {
        let cell_pixels = cell.area_pixels(grid);
        if (self.pixels() as f64) < self.min_cell_multiple * cell_pixels {
            return Err(Error::WindowTooSmall {
                window_pixels: self.pixels(),
                cell_pixels,
                multiple: self.min_cell_multiple,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Snr,
    Skewness,
    NakagamiM,
    NakagamiOmega,
}

impl Statistic {
    pub fn name(&self) -> &'static str {
        match self {
            Statistic::Snr => "snr",
            Statistic::Skewness => "skewness",
            Statistic::NakagamiM => "nakagami_m",
            Statistic::NakagamiOmega => "nakagami_omega",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [Statistic::Snr, Statistic::Skewness, Statistic::NakagamiM, Statistic::NakagamiOmega]
            .into_iter()
            .find(|s| s.name() == name)
    }

    pub fn evaluate<T: Real>(&self, patch: &[T]) -> Result<T> {
        match self {
            Statistic::Snr => patch_snr(patch),
            Statistic::Skewness => patch_skewness(patch),
            Statistic::NakagamiM => nakagami_ml(patch).map(|e| e.m),
            Statistic::NakagamiOmega => nakagami_ml(patch).map(|e| e.omega),
        }
    }
}

/// Map of a windowed statistic. Entry `(i, j)` comes from the window whose
/// top-left source pixel is `(i * stride_a, j * stride_l)`. Windows on which
/// the statistic is undefined hold NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametricImage<T> {
    pub values: Array2<T>,
    pub statistic: Statistic,
    pub window: WindowSpec,
    pub source_grid: GridSpec,
}

impl<T: Real> ParametricImage<T> {
    pub fn origin(&self, i: usize, j: usize) -> (usize, usize) {
        (i * self.window.stride_a, j * self.window.stride_l)
    }

    /// Window centre in source pixel coordinates.
    pub fn center(&self, i: usize, j: usize) -> (f64, f64) {
        let (a, l) = self.origin(i, j);
        (a as f64 + (self.window.height as f64 - 1.0) / 2.0, l as f64 + (self.window.width as f64 - 1.0) / 2.0)
    }

    pub fn is_compatible(&self, other: &ParametricImage<T>) -> bool {
        self.window == other.window
            && self.values.dim() == other.values.dim()
            && self.source_grid.dim() == other.source_grid.dim()
    }

    /// Element-wise mean of maps with identical geometry.
    pub fn average(maps: &[ParametricImage<T>]) -> Result<ParametricImage<T>> {
        let first = maps.first().ok_or_else(|| Error::Config("no maps to average".into()))?;
        if let Some(bad) = maps.iter().find(|m| !first.is_compatible(m) || m.statistic != first.statistic) {
            return Err(Error::WindowMismatch(format!(
                "cannot average {:?} {:?} with {:?} {:?}",
                first.statistic, first.window, bad.statistic, bad.window
            )));
        }
        let mut values = Array2::<T>::zeros(first.values.dim());
        for m in maps {
            values = values + &m.values;
        }
        let n = T::from_usize_lossy(maps.len());
        Ok(ParametricImage { values: values.mapv(|v| v / n), ..first.clone() })
    }
}

/// Evaluates `statistic` on every window position of `env`.
///
/// When `rescell` is given the window must hold at least
/// `window.min_cell_multiple` resolution cells; `None` skips that check.
pub fn parametric_image<T: Real>(
    env: &EnvelopeFrame<T>,
    window: &WindowSpec,
    statistic: Statistic,
    rescell: Option<&ResolutionCell>,
) -> Result<ParametricImage<T>> {
    window.validate()?;
    if let Some(cell) = rescell {
        window.check_cells(cell, &env.grid)?;
    }
    let values = window_map(env.data.view(), window, statistic)?;
    Ok(ParametricImage { values, statistic, window: *window, source_grid: env.grid })
}

/// Sliding-window evaluation over a bare array.
pub fn window_map<T: Real>(data: ArrayView2<T>, window: &WindowSpec, statistic: Statistic) -> Result<Array2<T>> {
    window.validate()?;
    let (rows, cols) = window.output_dim(data.dim())?;
    let flat: Vec<T> = (0..rows)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut buf = Vec::with_capacity(window.pixels());
            (0..cols)
                .map(|j| {
                    let (a, l) = (i * window.stride_a, j * window.stride_l);
                    buf.clear();
                    let patch = data.slice(ndarray::s![a..a + window.height, l..l + window.width]);
                    buf.extend(patch.iter().copied());
                    statistic.evaluate(&buf).unwrap_or_else(|_| T::nan())
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(Array2::from_shape_vec((rows, cols), flat).expect("rows * cols values"))
}
