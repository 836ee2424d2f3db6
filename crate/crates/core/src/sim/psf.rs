use ndarray::Array2;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::scalar::Real;
use crate::sim::ImagingParams;

/// Gaussian-windowed axial cosine, sampled on the image pitches with the
/// peak at the kernel centre.
#[derive(Debug, Clone, PartialEq)]
pub struct Psf<T> {
    pub kernel: Array2<T>,
    pub d_axial: f64,
    pub d_lateral: f64,
    /// Axial half-length of the support, mm.
    pub support_axial_mm: f64,
    /// Lateral half-length of the support, mm.
    pub support_lateral_mm: f64,
}

impl<T> Psf<T> {
    pub fn center(&self) -> (usize, usize) {
        let (a, l) = self.kernel.dim();
        (a / 2, l / 2)
    }

    pub fn matches_grid(&self, grid: &GridSpec) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs());
        close(self.d_axial, grid.d_axial) && close(self.d_lateral, grid.d_lateral)
    }
}

/// Builds the PSF with zero carrier phase.
pub fn build_psf<T: Real>(params: &ImagingParams, grid: &GridSpec) -> Result<Psf<T>> {
    build_psf_with_phase(params, grid, 0.0)
}

/// Builds `exp(-(a²/σa² + l²/σl²)/2) · cos(2π·k·a + phase)` with
/// `k = 2 f_c / v`. The axial support is `n_pulses` acoustic wavelengths on
/// each side of the centre, the lateral support 4 σl.
pub fn build_psf_with_phase<T: Real>(params: &ImagingParams, grid: &GridSpec, phase: f64) -> Result<Psf<T>> {
    params.validate()?;
    let nyquist_pitch = params.v / (4000.0 * params.f_c);
    if grid.d_axial > nyquist_pitch {
        return Err(Error::Config(format!(
            "axial pitch {:.5} mm undersamples the {:.2} MHz carrier (needs <= {:.5} mm)",
            grid.d_axial, params.f_c, nyquist_pitch
        )));
    }
    let support_axial_mm = params.n_pulses as f64 * params.wavelength_mm();
    let support_lateral_mm = 4.0 * params.sigma_l;
    // the epsilon keeps a support that is an exact pitch multiple from losing its last tap
    let half_a = (support_axial_mm / grid.d_axial + 1e-9).floor() as usize;
    let half_l = (support_lateral_mm / grid.d_lateral + 1e-9).floor() as usize;
    let k = params.carrier_cycles_per_mm();
    let (sa, sl) = (params.sigma_a, params.sigma_l);
    let kernel = Array2::from_shape_fn((2 * half_a + 1, 2 * half_l + 1), |(i, j)| {
        let a = (i as f64 - half_a as f64) * grid.d_axial;
        let l = (j as f64 - half_l as f64) * grid.d_lateral;
        let env = (-0.5 * (a * a / (sa * sa) + l * l / (sl * sl))).exp();
        T::lit(env * (2.0 * std::f64::consts::PI * k * a + phase).cos())
    });
    Ok(Psf { kernel, d_axial: grid.d_axial, d_lateral: grid.d_lateral, support_axial_mm, support_lateral_mm })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ImagingParams {
        ImagingParams {
            f_c: 5.0,
            f_s: 60.0,
            v: 1540.0,
            sigma_a: 0.2,
            sigma_l: 0.3,
            f_number: 2.0,
            n_pulses: 3,
            noise_std: 0.0,
        }
    }

    fn grid(p: &ImagingParams) -> GridSpec {
        p.grid(256, 128, 0.1).unwrap()
    }

    #[test]
    fn unit_peak_and_even_symmetry() {
        let p = params();
        let psf: Psf<f64> = build_psf(&p, &grid(&p)).unwrap();
        let (ca, cl) = psf.center();
        assert_eq!(psf.kernel[[ca, cl]], 1.0);
        let (na, nl) = psf.kernel.dim();
        assert!(na % 2 == 1 && nl % 2 == 1);
        for i in 0..na {
            for j in 0..nl {
                let v = psf.kernel[[i, j]];
                assert!((v - psf.kernel[[na - 1 - i, j]]).abs() < 1e-15);
                assert!((v - psf.kernel[[i, nl - 1 - j]]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn first_zero_crossing_at_quarter_period() {
        // direct evaluation of the PSF formula along the axis
        let p = params();
        let oracle = |a_mm: f64| {
            (-0.5 * a_mm * a_mm / (p.sigma_a * p.sigma_a)).exp()
                * (2.0 * std::f64::consts::PI * a_mm * 2.0 * p.f_c * 1e6 / (p.v * 1e3)).cos()
        };
        let period = p.v * 1e3 / (2.0 * p.f_c * 1e6); // mm
        let quarter = period / 4.0;
        assert!(oracle(quarter).abs() < 1e-12);
        assert!(oracle(0.99 * quarter) > 0.0 && oracle(1.01 * quarter) < 0.0);

        let g = grid(&p);
        let psf: Psf<f64> = build_psf(&p, &g).unwrap();
        let (ca, cl) = psf.center();
        let axis: Vec<f64> = (ca..psf.kernel.dim().0).map(|i| psf.kernel[[i, cl]]).collect();
        for (i, &v) in axis.iter().enumerate() {
            assert!((v - oracle(i as f64 * g.d_axial)).abs() < 1e-12);
        }
        // at 60 MHz the quarter period lands on a sample, so allow a numerical zero there
        let first_neg = axis.iter().position(|&v| v < 1e-12).unwrap();
        let a0 = (first_neg - 1) as f64 * g.d_axial;
        let a1 = first_neg as f64 * g.d_axial;
        assert!(a0 < quarter && quarter <= a1 + 1e-12);
    }

    #[test]
    fn support_follows_pulse_count() {
        let p = params();
        let g = grid(&p);
        let psf: Psf<f32> = build_psf(&p, &g).unwrap();
        assert!((psf.support_axial_mm - 3.0 * 0.308).abs() < 1e-9);
        assert_eq!(psf.kernel.dim().0, 2 * 72 + 1);
        assert_eq!(psf.kernel.dim().1, 2 * 12 + 1);
    }

    #[test]
    fn undersampled_carrier_is_rejected() {
        let p = params();
        let g = GridSpec::new(128, 128, 0.1, 0.1).unwrap();
        assert!(matches!(build_psf::<f64>(&p, &g), Err(Error::Config(_))));
    }
}
