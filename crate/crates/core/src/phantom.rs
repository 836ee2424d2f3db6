//! Region masks and scatterer echogenicity maps.
//!
//! A phantom is described by two independent binary masks: `sc` selects the
//! scatterer number density of each pixel and `ms` selects its mean
//! scatterer amplitude. Each pixel then holds a scatterer with a probability
//! derived from the density, and the scatterer's amplitude is Gaussian around
//! the local mean.

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::scalar::Real;
use crate::seed::{self, tag};

/// Full width at the −6 dB point of a Gaussian amplitude profile with
/// standard deviation `sigma`.
#[inline]
pub fn half_amplitude_width(sigma: f64) -> f64 {
    2.0 * sigma * (2.0 * std::f64::consts::LN_2).sqrt()
}

/// Parameters of the random shape generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeConfig {
    /// Inclusive range of connected regions kept per mask.
    pub blob_count: (usize, usize),
    /// Minimum area of every kept region, as a fraction of the grid.
    pub min_area_fraction: f64,
    /// Range of the low-pass correlation length, as a fraction of each
    /// grid dimension.
    pub smoothness: (f64, f64),
    /// Range of the quantile at which the smoothed field is thresholded.
    pub threshold_quantile: (f64, f64),
    /// Side of the coarse noise lattice that is blurred and upsampled.
    pub lattice: usize,
    /// Rejection-sampling budget.
    pub max_attempts: usize,
}

impl Default for ShapeConfig {
    fn default() -> Self {
        ShapeConfig {
            blob_count: (1, 4),
            min_area_fraction: 0.01,
            smoothness: (0.04, 0.10),
            threshold_quantile: (0.5, 0.85),
            lattice: 64,
            max_attempts: 64,
        }
    }
}

impl ShapeConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.blob_count;
        if lo > hi {
            return Err(Error::Config(format!("blob count range {lo}..={hi} is empty")));
        }
        if !(0.0..=1.0).contains(&self.min_area_fraction) {
            return Err(Error::Config("min_area_fraction must lie in [0, 1]".into()));
        }
        let (s0, s1) = self.smoothness;
        if !(s0 > 0.0 && s0 <= s1) {
            return Err(Error::Config("smoothness range must be positive and ordered".into()));
        }
        let (q0, q1) = self.threshold_quantile;
        if !(0.0 < q0 && q0 <= q1 && q1 < 1.0) {
            return Err(Error::Config("threshold quantiles must satisfy 0 < lo <= hi < 1".into()));
        }
        if self.lattice < 8 {
            return Err(Error::Config("noise lattice must be at least 8".into()));
        }
        if self.max_attempts == 0 {
            return Err(Error::Config("max_attempts must be positive".into()));
        }
        Ok(())
    }
}

/// Scatterer-density mask `sc` and mean-amplitude mask `ms`, values in {0, 1}.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMasks {
    pub sc: Array2<u8>,
    pub ms: Array2<u8>,
}

impl RegionMasks {
    /// Both masks constant.
    pub fn uniform(grid: &GridSpec, sc: u8, ms: u8) -> Self {
        RegionMasks { sc: Array2::from_elem(grid.dim(), sc.min(1)), ms: Array2::from_elem(grid.dim(), ms.min(1)) }
    }

    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        if self.sc.dim() != grid.dim() || self.ms.dim() != grid.dim() {
            return Err(Error::Config(format!(
                "mask dims {:?}/{:?} do not match grid {:?}",
                self.sc.dim(),
                self.ms.dim(),
                grid.dim()
            )));
        }
        if self.sc.iter().chain(self.ms.iter()).any(|&v| v > 1) {
            return Err(Error::Config("masks must be binary".into()));
        }
        Ok(())
    }
}

/// Densities and mean amplitudes for the two mask labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionAssignment {
    /// Scatterers per resolution cell where `sc` is 0 and 1.
    pub density_per_cell: [f64; 2],
    /// Mean scatterer amplitude where `ms` is 0 and 1.
    pub mu_s: [f64; 2],
    pub sigma_s: f64,
}

impl RegionAssignment {
    pub fn homogeneous(density: f64, mu_s: f64, sigma_s: f64) -> Self {
        RegionAssignment { density_per_cell: [density; 2], mu_s: [mu_s; 2], sigma_s }
    }

    pub fn validate(&self) -> Result<()> {
        if self.density_per_cell.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::Config("densities must be finite and non-negative".into()));
        }
        if self.mu_s.iter().any(|m| !m.is_finite()) {
            return Err(Error::Config("mean amplitudes must be finite".into()));
        }
        if !(self.sigma_s.is_finite() && self.sigma_s >= 0.0) {
            return Err(Error::Config("sigma_s must be finite and non-negative".into()));
        }
        Ok(())
    }
}

/// Ranges from which region assignments are drawn. `sc` label 0 is the
/// under-developed region and label 1 the fully developed one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssignmentRanges {
    pub uds_density: (f64, f64),
    pub fds_density: (f64, f64),
    pub mu_s: (f64, f64),
    pub sigma_s: f64,
}

impl Default for AssignmentRanges {
    fn default() -> Self {
        AssignmentRanges { uds_density: (1.0, 2.0), fds_density: (11.0, 16.0), mu_s: (0.3, 1.3), sigma_s: 0.03 }
    }
}

impl AssignmentRanges {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> RegionAssignment {
        RegionAssignment {
            density_per_cell: [uniform(rng, self.uds_density), uniform(rng, self.fds_density)],
            mu_s: [uniform(rng, self.mu_s), uniform(rng, self.mu_s)],
            sigma_s: self.sigma_s,
        }
    }
}

pub(crate) fn uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

/// Scatterer echogenicity grid `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScattererMap<T> {
    pub g: Array2<T>,
    pub grid: GridSpec,
    pub seed: u64,
    pub assignment: RegionAssignment,
}

/// Draws the two region masks. `sc` and `ms` come from independent streams
/// of `seed`.
pub fn generate_region_masks(seed: u64, grid: &GridSpec, cfg: &ShapeConfig) -> Result<RegionMasks> {
    grid.validate()?;
    cfg.validate()?;
    let min_area = (cfg.min_area_fraction * grid.len() as f64).ceil() as usize;
    if cfg.blob_count.0.saturating_mul(min_area.max(1)) > grid.len() || min_area > grid.len() {
        return Err(Error::Config(format!(
            "a {}x{} grid cannot host {} regions of at least {min_area} pixels",
            grid.n_axial, grid.n_lateral, cfg.blob_count.0
        )));
    }
    let sc = random_shape(&mut seed::rng_for(seed, &[tag::SC_MASK]), grid.dim(), cfg, min_area)?;
    let ms = random_shape(&mut seed::rng_for(seed, &[tag::MS_MASK]), grid.dim(), cfg, min_area)?;
    Ok(RegionMasks { sc, ms })
}

fn random_shape(rng: &mut ChaCha8Rng, dim: (usize, usize), cfg: &ShapeConfig, min_area: usize) -> Result<Array2<u8>> {
    let (lo, hi) = cfg.blob_count;
    let keep = if hi == 0 { 0 } else { rng.random_range(lo..=hi) };
    if keep == 0 {
        return Ok(Array2::zeros(dim));
    }
    for _ in 0..cfg.max_attempts {
        let field = smooth_field(rng, dim, cfg);
        let q = uniform(rng, cfg.threshold_quantile);
        let threshold = quantile(field.as_slice().expect("standard layout"), q);
        let binary = field.mapv(|v| v > threshold);
        let mut regions = connected_regions(&binary);
        regions.retain(|r| r.len() >= min_area.max(1));
        if regions.is_empty() {
            continue;
        }
        // largest first, ties broken by raster position of the first pixel
        regions.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
        let mut mask = Array2::zeros(dim);
        let flat = mask.as_slice_mut().expect("standard layout");
        for region in regions.iter().take(keep) {
            for &idx in region {
                flat[idx] = 1u8;
            }
        }
        return Ok(mask);
    }
    Err(Error::Config(format!("no admissible shape after {} attempts; lower min_area_fraction", cfg.max_attempts)))
}

/// White noise on a coarse lattice, Gaussian-blurred and bilinearly
/// upsampled to `dim`.
fn smooth_field(rng: &mut ChaCha8Rng, dim: (usize, usize), cfg: &ShapeConfig) -> Array2<f64> {
    let n = cfg.lattice;
    let noise = Array2::from_shape_simple_fn((n, n), || StandardNormal.sample(rng));
    let sigma = uniform(rng, cfg.smoothness) * n as f64;
    let coarse = gaussian_blur(&noise, sigma);
    upsample_bilinear(&coarse, dim)
}

fn gaussian_blur(src: &Array2<f64>, sigma: f64) -> Array2<f64> {
    let radius = (3.0 * sigma).ceil().max(1.0) as isize;
    let taps: Vec<f64> = (-radius..=radius).map(|k| (-0.5 * (k as f64 / sigma).powi(2)).exp()).collect();
    let (rows, cols) = src.dim();
    let clamp = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;

    let mut tmp = Array2::zeros((rows, cols));
    for r in 0..rows {
        for c in 0..cols {
            let mut acc = 0.0;
            for (t, w) in taps.iter().enumerate() {
                acc += w * src[[r, clamp(c as isize + t as isize - radius, cols)]];
            }
            tmp[[r, c]] = acc;
        }
    }
    let mut out = Array2::zeros((rows, cols));
    for r in 0..rows {
        for c in 0..cols {
            let mut acc = 0.0;
            for (t, w) in taps.iter().enumerate() {
                acc += w * tmp[[clamp(r as isize + t as isize - radius, rows), c]];
            }
            out[[r, c]] = acc;
        }
    }
    out
}

fn upsample_bilinear(src: &Array2<f64>, (rows, cols): (usize, usize)) -> Array2<f64> {
    let (sr, sc) = src.dim();
    let scale = |i: usize, n: usize, m: usize| -> (usize, usize, f64) {
        let x = if n > 1 { i as f64 * (m - 1) as f64 / (n - 1) as f64 } else { 0.0 };
        let i0 = (x.floor() as usize).min(m - 1);
        let i1 = (i0 + 1).min(m - 1);
        (i0, i1, x - i0 as f64)
    };
    let col_idx: Vec<_> = (0..cols).map(|c| scale(c, cols, sc)).collect();
    Array2::from_shape_fn((rows, cols), |(r, c)| {
        let (r0, r1, fr) = scale(r, rows, sr);
        let (c0, c1, fc) = col_idx[c];
        let top = src[[r0, c0]] * (1.0 - fc) + src[[r0, c1]] * fc;
        let bot = src[[r1, c0]] * (1.0 - fc) + src[[r1, c1]] * fc;
        top * (1.0 - fr) + bot * fr
    })
}

fn quantile(values: &[f64], q: f64) -> f64 {
    let mut buf = values.to_vec();
    let k = ((buf.len() - 1) as f64 * q).round() as usize;
    let (_, v, _) = buf.select_nth_unstable_by(k, |a, b| a.total_cmp(b));
    *v
}

/// 4-connected foreground regions as lists of raster indices, each list
/// starting with its smallest index.
pub(crate) fn connected_regions(binary: &Array2<bool>) -> Vec<Vec<usize>> {
    let (rows, cols) = binary.dim();
    let flat = binary.as_slice().expect("standard layout");
    let mut seen = vec![false; flat.len()];
    let mut regions = Vec::new();
    let mut stack = Vec::new();
    for start in 0..flat.len() {
        if !flat[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut region = Vec::new();
        while let Some(idx) = stack.pop() {
            region.push(idx);
            let (r, c) = (idx / cols, idx % cols);
            let mut visit = |n: usize| {
                if flat[n] && !seen[n] {
                    seen[n] = true;
                    stack.push(n);
                }
            };
            if r > 0 {
                visit(idx - cols);
            }
            if r + 1 < rows {
                visit(idx + cols);
            }
            if c > 0 {
                visit(idx - 1);
            }
            if c + 1 < cols {
                visit(idx + 1);
            }
        }
        region.sort_unstable();
        regions.push(region);
    }
    regions
}

/// Number of pixels covered by one −6 dB elliptical resolution cell of a
/// Gaussian PSF with the given standard deviations (mm).
pub fn resolution_cell_pixels(psf_sigma_a: f64, psf_sigma_l: f64, grid: &GridSpec) -> f64 {
    let wa = half_amplitude_width(psf_sigma_a);
    let wl = half_amplitude_width(psf_sigma_l);
    std::f64::consts::PI * (wa / 2.0) * (wl / 2.0) / grid.pixel_area()
}

/// Per-pixel scatterer probability for `density` scatterers per cell of
/// `cell_pixels` pixels.
pub fn bernoulli_p_for_cell(density: f64, cell_pixels: f64) -> Result<f64> {
    if !(density.is_finite() && density >= 0.0) {
        return Err(Error::Config(format!("density must be finite and non-negative, got {density}")));
    }
    if !(cell_pixels.is_finite() && cell_pixels > 0.0) {
        return Err(Error::Config(format!("resolution cell must cover a positive area, got {cell_pixels}")));
    }
    let p = density / cell_pixels;
    if p > 1.0 {
        return Err(Error::DensityUnrepresentable { density, cell_pixels, p });
    }
    Ok(p)
}

/// Maps a density (scatterers per resolution cell) to the per-pixel
/// Bernoulli probability on `grid`.
pub fn density_to_bernoulli_p(density: f64, psf_sigma_a: f64, psf_sigma_l: f64, grid: &GridSpec) -> Result<f64> {
    if !(psf_sigma_a > 0.0 && psf_sigma_l > 0.0) {
        return Err(Error::Config("PSF widths must be positive".into()));
    }
    bernoulli_p_for_cell(density, resolution_cell_pixels(psf_sigma_a, psf_sigma_l, grid))
}

/// Samples `g = K * A` with `K ~ Bernoulli(p[sc])` and
/// `A ~ Normal(mu_s[ms], sigma_s^2)`.
pub fn sample_scatterer_map<T: Real>(
    masks: &RegionMasks,
    assign: &RegionAssignment,
    psf_sigma: (f64, f64),
    grid: &GridSpec,
    seed: u64,
) -> Result<ScattererMap<T>> {
    assign.validate()?;
    let p = [
        density_to_bernoulli_p(assign.density_per_cell[0], psf_sigma.0, psf_sigma.1, grid)?,
        density_to_bernoulli_p(assign.density_per_cell[1], psf_sigma.0, psf_sigma.1, grid)?,
    ];
    sample_with_probabilities(masks, p, assign, grid, seed)
}

/// As [`sample_scatterer_map`] with explicit per-label probabilities.
pub fn sample_with_probabilities<T: Real>(
    masks: &RegionMasks,
    p: [f64; 2],
    assign: &RegionAssignment,
    grid: &GridSpec,
    seed: u64,
) -> Result<ScattererMap<T>> {
    masks.validate(grid)?;
    assign.validate()?;
    if p.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::Config(format!("probabilities {p:?} outside [0, 1]")));
    }
    let mut rng = seed::rng_for(seed, &[tag::SCATTER]);
    let sigma = assign.sigma_s;
    let g = ndarray::Zip::from(&masks.sc).and(&masks.ms).map_collect(|&sc, &ms| {
        let u: f64 = rng.random();
        if u < p[sc as usize] {
            let z: f64 = if sigma > 0.0 { StandardNormal.sample(&mut rng) } else { 0.0 };
            T::lit(assign.mu_s[ms as usize] + sigma * z)
        } else {
            T::zero()
        }
    });
    Ok(ScattererMap { g, grid: *grid, seed, assignment: *assign })
}
