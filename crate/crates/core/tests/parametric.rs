mod common;

use ndarray::{s, Array2, ArrayView2};
use qus_core::sim::resolution_cell_extent;
use qus_core::stats::{autocovariance_fwhm, correlation_cell_size};
use qus_core::{parametric_image, EnvelopeFrame, Error, Statistic, WindowSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn central_mean(values: &Array2<f64>) -> f64 {
    let (r, c) = values.dim();
    let v: Vec<f64> = values.slice(s![1..r - 1, 1..c - 1]).iter().copied().filter(|v| v.is_finite()).collect();
    common::mean(&v)
}

#[test]
fn output_dims_and_small_window_contract() {
    let params = common::params_20mhz();
    let grid = common::grid(&params, 256, 256);
    let env = common::homogeneous_envelope(&params, &grid, 12.0, 1);
    let w = WindowSpec::new(64, 64).with_stride(16, 16);
    let img = parametric_image(&env, &w, Statistic::Snr, None).unwrap();
    assert_eq!(img.values.dim(), (13, 13));

    // a window twice the cell area with the multiple-8 rule
    let cell = resolution_cell_extent(&params);
    let cell_px = cell.area_pixels(&grid);
    let side = (2.0 * cell_px).sqrt().round() as usize;
    let small = WindowSpec::new(side.max(8), side.max(8));
    let r = parametric_image(&env, &small, Statistic::Snr, Some(&cell));
    assert!(matches!(r, Err(Error::WindowTooSmall { .. })));
}

#[test]
fn rayleigh_field_gives_unit_m_with_shrinking_spread() {
    // i.i.d. Rayleigh amplitudes stand in for fully developed speckle
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let z = Normal::new(0.0, 1.0).unwrap();
    let data = Array2::from_shape_fn((512, 512), |_| f64::hypot(z.sample(&mut rng), z.sample(&mut rng)));
    let params = common::params_20mhz();
    let env = EnvelopeFrame { data, grid: common::grid(&params, 512, 512), params };
    let mut spreads = Vec::new();
    for side in [16, 32, 64] {
        let img = parametric_image(&env, &WindowSpec::new(side, side), Statistic::NakagamiM, None).unwrap();
        let v: Vec<f64> = img.values.iter().copied().collect();
        let m = common::mean(&v);
        assert!((m - 1.0).abs() < 0.03, "window {side}: mean m {m}");
        let sd = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt();
        spreads.push(sd);
    }
    assert!(spreads[0] > spreads[1] && spreads[1] > spreads[2], "{spreads:?}");
}

#[test]
fn degenerate_windows_become_nan() {
    let params = common::params_20mhz();
    let grid = common::grid(&params, 128, 128);
    let mut data = Array2::from_elem(grid.dim(), 1.0);
    data.slice_mut(s![64.., ..]).iter_mut().enumerate().for_each(|(i, v)| *v = 1.0 + (i % 7) as f64);
    let env = EnvelopeFrame { data, grid, params };
    let img = parametric_image(&env, &WindowSpec::new(32, 32), Statistic::NakagamiM, None).unwrap();
    assert!(img.values[[0, 0]].is_nan());
    assert!(img.values[[img.values.nrows() - 1, 0]].is_finite());
}

#[test]
fn nakagami_m_rises_with_density() {
    let params = common::params_20mhz();
    let grid = common::grid(&params, 512, 128);
    let window = WindowSpec::new(128, 64).with_stride(64, 32);
    let densities = [1.0, 2.0, 4.0, 8.0, 12.0];
    let mut seed_means = Vec::new();
    for &d in &densities {
        let per_seed: Vec<f64> = (0..20u64)
            .map(|seed| {
                let env = common::homogeneous_envelope(&params, &grid, d, 1000 + seed);
                central_mean(&parametric_image(&env, &window, Statistic::NakagamiM, None).unwrap().values)
            })
            .collect();
        seed_means.push(common::mean(&per_seed));
    }
    let rho = common::spearman(&densities, &seed_means);
    assert!(rho > 0.9, "spearman {rho}, means {seed_means:?}");
    assert!(seed_means.windows(2).all(|w| w[1] >= w[0]), "{seed_means:?}");
}

/// Normalised autocovariance along one axis by direct summation.
fn brute_half_width(data: ArrayView2<f64>, axial: bool) -> f64 {
    let mean = data.mean().unwrap();
    let x = data.mapv(|v| v - mean);
    let (na, nl) = x.dim();
    let c = |k: usize| -> f64 {
        let mut acc = 0.0;
        if axial {
            for i in 0..na - k {
                for j in 0..nl {
                    acc += x[[i, j]] * x[[i + k, j]];
                }
            }
        } else {
            for i in 0..na {
                for j in 0..nl - k {
                    acc += x[[i, j]] * x[[i, j + k]];
                }
            }
        }
        acc
    };
    let c0 = c(0);
    let mut prev = 1.0;
    for k in 1.. {
        let r = c(k) / c0;
        if r < 0.5 {
            return 2.0 * ((k - 1) as f64 + (prev - 0.5) / (prev - r));
        }
        prev = r;
    }
    unreachable!()
}

#[test]
fn correlation_cell_matches_direct_autocovariance() {
    let params = common::params_20mhz();
    let grid = common::grid(&params, 512, 256);
    let env = common::homogeneous_envelope(&params, &grid, 12.0, 77);
    let (fa, fl) = autocovariance_fwhm(env.data.view()).unwrap();
    let (ba, bl) = (brute_half_width(env.data.view(), true), brute_half_width(env.data.view(), false));
    assert!((fa - ba).abs() / ba < 0.25, "axial {fa} vs {ba}");
    assert!((fl - bl).abs() / bl < 0.25, "lateral {fl} vs {bl}");
    let cell = correlation_cell_size(&env).unwrap();
    assert!((cell.axial_mm - fa * grid.d_axial).abs() < 1e-12);
}

#[test]
fn doubling_the_psf_doubles_the_measured_cell() {
    let mut params = common::params_20mhz();
    params.n_pulses = 5;
    let grid = common::grid(&params, 1024, 256);
    let base = correlation_cell_size(&common::homogeneous_envelope(&params, &grid, 12.0, 5)).unwrap();
    params.sigma_a *= 2.0;
    params.sigma_l *= 2.0;
    // keep the axial support a similar number of sigmas
    params.n_pulses = 10;
    let wide = correlation_cell_size(&common::homogeneous_envelope(&params, &grid, 12.0, 5)).unwrap();
    let (ra, rl) = (wide.axial_mm / base.axial_mm, wide.lateral_mm / base.lateral_mm);
    assert!((ra - 2.0).abs() <= 0.3, "axial ratio {ra}");
    assert!((rl - 2.0).abs() <= 0.3, "lateral ratio {rl}");
}

#[test]
fn white_noise_cell_is_one_pixel() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let z = Normal::new(0.0f64, 1.0).unwrap();
    let data = Array2::from_shape_fn((256, 256), |_| z.sample(&mut rng).abs());
    let (fa, fl) = autocovariance_fwhm(data.view()).unwrap();
    assert!((fa - 1.0).abs() < 0.1 && (fl - 1.0).abs() < 0.1, "{fa} x {fl}");
}

#[test]
fn small_frames_are_rejected() {
    let params = common::params_20mhz();
    let grid = common::grid(&params, 256, 64);
    let env = common::homogeneous_envelope(&params, &grid, 12.0, 1);
    assert!(matches!(correlation_cell_size(&env), Err(Error::Config(_))));
}
