use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest grid dimension accepted for phantoms.
pub const MIN_GRID_DIM: usize = 64;

/// Pixel grid with physical pitches in millimetres. Rows are axial samples,
/// columns are lateral lines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_axial: usize,
    pub n_lateral: usize,
    pub d_axial: f64,
    pub d_lateral: f64,
}

impl GridSpec {
    pub fn new(n_axial: usize, n_lateral: usize, d_axial: f64, d_lateral: f64) -> Result<Self> {
        let g = GridSpec { n_axial, n_lateral, d_axial, d_lateral };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_axial < MIN_GRID_DIM || self.n_lateral < MIN_GRID_DIM {
            return Err(Error::Config(format!(
                "grid {}x{} is below the {MIN_GRID_DIM}x{MIN_GRID_DIM} minimum",
                self.n_axial, self.n_lateral
            )));
        }
        if !(self.d_axial > 0.0 && self.d_lateral > 0.0) || !self.d_axial.is_finite() || !self.d_lateral.is_finite() {
            return Err(Error::Config(format!(
                "pixel pitches must be positive, got {} x {} mm",
                self.d_axial, self.d_lateral
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn dim(&self) -> (usize, usize) {
        (self.n_axial, self.n_lateral)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n_axial * self.n_lateral
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn pixel_area(&self) -> f64 {
        self.d_axial * self.d_lateral
    }

    pub fn same_pitch(&self, other: &GridSpec) -> bool {
        rel_eq(self.d_axial, other.d_axial) && rel_eq(self.d_lateral, other.d_lateral)
    }
}

fn rel_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
}

/// −6 dB extent of the beam profile, in millimetres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolutionCell {
    pub axial_mm: f64,
    pub lateral_mm: f64,
}

impl ResolutionCell {
    /// Elliptical cell area expressed in pixels of `grid`.
    pub fn area_pixels(&self, grid: &GridSpec) -> f64 {
        std::f64::consts::PI * (self.axial_mm / 2.0) * (self.lateral_mm / 2.0) / grid.pixel_area()
    }
}
