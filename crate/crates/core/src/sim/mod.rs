//! Grid-based pulse-echo simulation: `r = g * h + noise`, followed by
//! envelope detection and log compression.

mod convolve;
mod envelope;
mod frame;
mod params;
mod psf;

pub use convolve::{direct_convolve_same, fft_convolve_same, Convolver};
pub use envelope::{analytic_envelope, detect_envelope, log_compress, DEFAULT_DYNAMIC_RANGE_DB};
pub use frame::{BmodeFrame, EnvelopeFrame, RfFrame};
pub use params::{resolution_cell_extent, sample_imaging_params, ImagingParams, ParamRanges, DEFAULT_LATERAL_PITCH_MM};
pub use psf::{build_psf, build_psf_with_phase, Psf};

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::phantom::{sample_scatterer_map, RegionAssignment, RegionMasks, ScattererMap};
use crate::scalar::Real;
use crate::seed::{self, tag};

/// Convolves the scatterer map with the PSF (same-size, zero padded) and
/// adds white Gaussian noise scaled to `noise_std` times the RMS of the
/// noise-free field.
pub fn simulate_rf<T: Real>(
    map: &ScattererMap<T>,
    psf: &Psf<T>,
    params: &ImagingParams,
    seed: u64,
) -> Result<RfFrame<T>> {
    let conv = Convolver::new(psf.kernel.view(), map.g.dim());
    simulate_rf_with(&conv, map, psf, params, seed)
}

/// [`simulate_rf`] with a prepared convolver, for repeated frames sharing
/// one PSF.
pub fn simulate_rf_with<T: Real>(
    conv: &Convolver<T>,
    map: &ScattererMap<T>,
    psf: &Psf<T>,
    params: &ImagingParams,
    seed: u64,
) -> Result<RfFrame<T>> {
    if !psf.matches_grid(&map.grid) {
        return Err(Error::Config(format!(
            "scatterer map pitch {}x{} mm differs from PSF pitch {}x{} mm",
            map.grid.d_axial, map.grid.d_lateral, psf.d_axial, psf.d_lateral
        )));
    }
    let mut data = conv.convolve(map.g.view())?;
    if params.noise_std > 0.0 {
        let n = data.len() as f64;
        let rms = (data.iter().map(|v| v.as_f64().powi(2)).sum::<f64>() / n).sqrt();
        let std = params.noise_std * rms;
        let mut rng = seed::rng_for(seed, &[tag::NOISE]);
        for v in data.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v = *v + T::lit(std * z);
        }
    }
    Ok(RfFrame { data, grid: map.grid, params: *params })
}

/// RF frame of a single-region phantom with `density` scatterers per
/// resolution cell and amplitudes `Normal(mu_s, sigma_s^2)`.
pub fn simulate_homogeneous<T: Real>(
    params: &ImagingParams,
    grid: &GridSpec,
    density: f64,
    mu_s: f64,
    sigma_s: f64,
    seed: u64,
) -> Result<RfFrame<T>> {
    let masks = RegionMasks::uniform(grid, 1, 0);
    let assign = RegionAssignment::homogeneous(density, mu_s, sigma_s);
    let map = sample_scatterer_map::<T>(&masks, &assign, (params.sigma_a, params.sigma_l), grid, seed)?;
    let psf = build_psf(params, grid)?;
    simulate_rf(&map, &psf, params, seed)
}
