#![allow(dead_code)]

use qus_core::{detect_envelope, simulate_homogeneous, EnvelopeFrame, GridSpec, ImagingParams};

/// 5 MHz carrier sampled at 20 MHz: coarse enough that a 64x64 window
/// spans several axial speckle cells.
pub fn params_20mhz() -> ImagingParams {
    ImagingParams {
        f_c: 5.0,
        f_s: 20.0,
        v: 1540.0,
        sigma_a: 0.2,
        sigma_l: 0.3,
        f_number: 2.0,
        n_pulses: 3,
        noise_std: 0.0,
    }
}

pub fn grid(params: &ImagingParams, n_axial: usize, n_lateral: usize) -> GridSpec {
    params.grid(n_axial, n_lateral, 0.1).unwrap()
}

pub fn homogeneous_envelope(params: &ImagingParams, grid: &GridSpec, density: f64, seed: u64) -> EnvelopeFrame<f64> {
    let rf = simulate_homogeneous::<f64>(params, grid, density, 1.0, 0.03, seed).unwrap();
    detect_envelope(&rf)
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Average ranks, ties sharing the mean rank.
pub fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    pearson(&ranks(x), &ranks(y))
}
