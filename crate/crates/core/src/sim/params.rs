use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ResolutionCell};
use crate::phantom::{half_amplitude_width, uniform};
use crate::seed::{self, tag};

pub const DEFAULT_LATERAL_PITCH_MM: f64 = 0.1;

/// Acquisition parameters of one simulated frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImagingParams {
    /// Centre frequency, MHz.
    pub f_c: f64,
    /// RF sampling frequency, MHz.
    pub f_s: f64,
    /// Speed of sound, m/s.
    pub v: f64,
    /// Axial PSF standard deviation, mm.
    pub sigma_a: f64,
    /// Lateral PSF standard deviation, mm.
    pub sigma_l: f64,
    /// Recorded only; the lateral PSF width is given directly by `sigma_l`.
    pub f_number: f64,
    pub n_pulses: u32,
    /// Additive noise standard deviation as a fraction of the RF RMS.
    pub noise_std: f64,
}

impl ImagingParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("f_c", self.f_c),
            ("f_s", self.f_s),
            ("v", self.v),
            ("sigma_a", self.sigma_a),
            ("sigma_l", self.sigma_l),
            ("f_number", self.f_number),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {value}")));
            }
        }
        if self.n_pulses == 0 {
            return Err(Error::Config("n_pulses must be positive".into()));
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(Error::Config(format!("noise_std must be non-negative, got {}", self.noise_std)));
        }
        Ok(())
    }

    /// Axial sample spacing of two-way RF sampled at `f_s`, mm.
    pub fn axial_pitch_mm(&self) -> f64 {
        self.v / (2000.0 * self.f_s)
    }

    /// Acoustic wavelength `v / f_c`, mm.
    pub fn wavelength_mm(&self) -> f64 {
        self.v / (1000.0 * self.f_c)
    }

    /// Spatial frequency of the pulse-echo carrier along depth, cycles/mm.
    pub fn carrier_cycles_per_mm(&self) -> f64 {
        2000.0 * self.f_c / self.v
    }

    pub fn grid(&self, n_axial: usize, n_lateral: usize, d_lateral: f64) -> Result<GridSpec> {
        GridSpec::new(n_axial, n_lateral, self.axial_pitch_mm(), d_lateral)
    }
}

/// Uniform sampling ranges for [`ImagingParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamRanges {
    pub f_c: (f64, f64),
    pub f_s: (f64, f64),
    pub v: (f64, f64),
    pub sigma_a: (f64, f64),
    pub sigma_l: (f64, f64),
    pub f_number: (f64, f64),
    pub n_pulses: (u32, u32),
    pub noise_std: (f64, f64),
}

impl Default for ParamRanges {
    fn default() -> Self {
        ParamRanges {
            f_c: (4.0, 7.0),
            f_s: (60.0, 100.0),
            v: (1510.0, 1560.0),
            sigma_a: (0.1, 0.3),
            sigma_l: (0.13, 0.4),
            f_number: (1.5, 2.5),
            n_pulses: (3, 5),
            noise_std: (0.0, 0.05),
        }
    }
}

impl ParamRanges {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ImagingParams {
        ImagingParams {
            f_c: uniform(rng, self.f_c),
            f_s: uniform(rng, self.f_s),
            v: uniform(rng, self.v),
            sigma_a: uniform(rng, self.sigma_a),
            sigma_l: uniform(rng, self.sigma_l),
            f_number: uniform(rng, self.f_number),
            n_pulses: rng.random_range(self.n_pulses.0..=self.n_pulses.1.max(self.n_pulses.0)),
            noise_std: uniform(rng, self.noise_std),
        }
    }

    pub fn contains(&self, p: &ImagingParams) -> bool {
        let within = |(lo, hi): (f64, f64), x: f64| lo <= x && x <= hi;
        within(self.f_c, p.f_c)
            && within(self.f_s, p.f_s)
            && within(self.v, p.v)
            && within(self.sigma_a, p.sigma_a)
            && within(self.sigma_l, p.sigma_l)
            && within(self.f_number, p.f_number)
            && (self.n_pulses.0..=self.n_pulses.1).contains(&p.n_pulses)
            && within(self.noise_std, p.noise_std)
    }
}

/// Draws acquisition parameters uniformly from the default ranges.
pub fn sample_imaging_params(seed: u64) -> ImagingParams {
    ParamRanges::default().sample(&mut seed::rng_for(seed, &[tag::PARAMS]))
}

/// −6 dB full widths of the PSF envelope, mm.
pub fn resolution_cell_extent(params: &ImagingParams) -> ResolutionCell {
    ResolutionCell { axial_mm: half_amplitude_width(params.sigma_a), lateral_mm: half_amplitude_width(params.sigma_l) }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_stay_in_range_and_are_reproducible() {
        let r = ParamRanges::default();
        let mut sum_fc = 0.0;
        let mut sumsq_fc = 0.0;
        let n = 10_000;
        let mut pulses = [0usize; 3];
        for seed in 0..n {
            let p = sample_imaging_params(seed);
            assert!(r.contains(&p), "{p:?}");
            sum_fc += p.f_c;
            sumsq_fc += p.f_c * p.f_c;
            pulses[(p.n_pulses - 3) as usize] += 1;
        }
        assert_eq!(sample_imaging_params(42), sample_imaging_params(42));
        let mean = sum_fc / n as f64;
        let var = sumsq_fc / n as f64 - mean * mean;
        // uniform on [4, 7]: mean 5.5, standard error sqrt(0.75 / n)
        let se = (9.0f64 / 12.0 / n as f64).sqrt();
        assert!((mean - 5.5).abs() < 3.0 * se, "mean {mean}");
        assert!((var - 0.75).abs() < 0.05);
        assert!(pulses.iter().all(|&c| c > 3000), "{pulses:?}");
    }

    #[test]
    fn resolution_cell_widths() {
        let mut p = sample_imaging_params(1);
        p.sigma_a = 0.2;
        p.sigma_l = 0.3;
        let cell = resolution_cell_extent(&p);
        // 2 * 0.2 * sqrt(2 ln 2) = 0.47096...
        assert!((cell.axial_mm - 0.4710).abs() < 1e-4);
        assert!((cell.lateral_mm - 0.7065).abs() < 1e-4);
        p.sigma_a = 0.4;
        assert!((resolution_cell_extent(&p).axial_mm - 2.0 * cell.axial_mm).abs() < 1e-12);
    }

    #[test]
    fn axial_pitch_from_sampling() {
        let p = ImagingParams {
            f_c: 5.0,
            f_s: 60.0,
            v: 1540.0,
            sigma_a: 0.2,
            sigma_l: 0.3,
            f_number: 2.0,
            n_pulses: 3,
            noise_std: 0.0,
        };
        assert!((p.axial_pitch_mm() - 0.012833).abs() < 1e-6);
        assert!((p.carrier_cycles_per_mm() - 6.4935).abs() < 1e-4);
    }
}
