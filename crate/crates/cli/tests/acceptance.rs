//! Acceptance checks, one PASS/FAIL line each. Exits non-zero on any failure.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use ndarray::{s, Array2};
use qus_core::dataset::{decode, encode, read_sample};
use qus_core::sim::fft_convolve_same;
use qus_core::{
    detect_envelope, nakagami_ml, nakagami_moments, parametric_image, reference_classify, simulate_homogeneous,
    summarize_homogeneous, EnvelopeFrame, GridSpec, ImagingParams, ParametricImage, ReferenceProfile, SpeckleClass,
    Statistic, WindowSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn params() -> ImagingParams {
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

fn grid(p: &ImagingParams) -> GridSpec {
    p.grid(2048, 256, 0.1).unwrap()
}

fn phantom(density: f64, seed: u64) -> EnvelopeFrame<f64> {
    let p = params();
    let rf = simulate_homogeneous::<f64>(&p, &grid(&p), density, 1.0, 0.03, seed).unwrap();
    detect_envelope(&rf)
}

/// Finite values of a map with `rows` and `cols` window rows/columns dropped at every edge.
fn central(img: &ParametricImage<f64>, rows: usize, cols: usize) -> Vec<f64> {
    let (r, c) = img.values.dim();
    img.values.slice(s![rows..r - rows, cols..c - cols]).iter().copied().filter(|v| v.is_finite()).collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn rayleigh_limit() -> Outcome {
    let env = phantom(12.0, 1);
    let img = parametric_image(&env, &WindowSpec::new(64, 64), Statistic::Snr, None).map_err(|e| e.to_string())?;
    let v = central(&img, 1, 1);
    let m = mean(&v);
    let msg = format!("mean SNR {m:.4} over {} windows (want 1.91 +/- 0.08)", v.len());
    if (m - 1.91).abs() <= 0.08 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn nakagami_limits() -> Outcome {
    let window = WindowSpec::new(192, 96).with_stride(96, 48);
    let map = |density: f64, seed: u64| -> Result<Vec<f64>, String> {
        let img = parametric_image(&phantom(density, seed), &window, Statistic::NakagamiM, None)
            .map_err(|e| e.to_string())?;
        Ok(central(&img, 1, 1))
    };
    let fds = map(12.0, 1)?;
    let m_fds = mean(&fds);
    let uds = map(1.5, 2)?;
    let below = uds.iter().filter(|&&m| m <= 0.9).count() as f64 / uds.len() as f64;
    let msg = format!(
        "density 12 mean m {m_fds:.4} (want [0.92, 1.08]); density 1.5 m <= 0.9 in {:.1}% of {} windows (want >= 90%)",
        100.0 * below,
        uds.len()
    );
    if (0.92..=1.08).contains(&m_fds) && below >= 0.9 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn ml_recovery() -> Outcome {
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for m in [0.5f64, 1.0, 2.0] {
        for omega in [0.5, 2.0] {
            let g = Gamma::new(m, omega / m).unwrap();
            let a: Vec<f64> = (0..100_000).map(|_| g.sample(&mut rng).sqrt()).collect();
            let ml = nakagami_ml(&a).map_err(|e| e.to_string())?;
            let mom = nakagami_moments(&a).map_err(|e| e.to_string())?;
            worst.0 = worst.0.max((ml.m - m).abs() / m);
            worst.1 = worst.1.max((ml.omega - omega).abs() / omega);
            worst.2 = worst.2.max((ml.m - mom.m).abs() / mom.m);
        }
    }
    let msg = format!(
        "worst relative error m {:.3}% (< 2%), omega {:.3}% (< 1%), ML vs moments {:.3}% (<= 5%)",
        100.0 * worst.0,
        100.0 * worst.1,
        100.0 * worst.2
    );
    if worst.0 < 0.02 && worst.1 < 0.01 && worst.2 <= 0.05 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn reference_classifier() -> Outcome {
    let window = WindowSpec::new(128, 64).with_stride(64, 32);
    let snr = |density: f64, seed: u64| {
        parametric_image(&phantom(density, seed), &window, Statistic::Snr, None).map_err(|e| e.to_string())
    };
    let frames = |density: f64, base: u64| (0..20).map(|i| snr(density, base + i)).collect::<Result<Vec<_>, _>>();
    let reference = ReferenceProfile::from_snr_images(&frames(12.0, 100)?).map_err(|e| e.to_string())?;
    let accuracy = |maps: Vec<ParametricImage<f64>>, truth: SpeckleClass| -> Result<f64, String> {
        let test = ParametricImage::average(&maps).map_err(|e| e.to_string())?;
        let labels = reference_classify(&test, &reference, 0.03).map_err(|e| e.to_string())?;
        Ok(summarize_homogeneous(&labels.central(2, 1), truth).accuracy)
    };
    let fds = accuracy(frames(12.0, 200)?, SpeckleClass::Fds)?;
    let uds = accuracy(frames(1.5, 300)?, SpeckleClass::Uds)?;
    let msg =
        format!("FDS frames labeled FDS {:.1}%, UDS frames labeled UDS {:.1}% (want >= 95%)", 100.0 * fds, 100.0 * uds);
    if fds >= 0.95 && uds >= 0.95 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// Same-size 2D convolution by direct summation, kernel centred at `dim / 2`.
fn direct(image: &Array2<f64>, kernel: &Array2<f64>) -> Array2<f64> {
    let (na, nl) = image.dim();
    let (ka, kl) = kernel.dim();
    let (ca, cl) = ((ka / 2) as isize, (kl / 2) as isize);
    Array2::from_shape_fn((na, nl), |(i, j)| {
        let mut acc = 0.0;
        for u in 0..ka {
            for v in 0..kl {
                let (y, x) = (i as isize + ca - u as isize, j as isize + cl - v as isize);
                if (0..na as isize).contains(&y) && (0..nl as isize).contains(&x) {
                    acc += image[[y as usize, x as usize]] * kernel[[u, v]];
                }
            }
        }
        acc
    })
}

fn convolution_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let image = Array2::from_shape_fn((32, 32), |_| rng.random_range(-1.0..1.0));
        let kdim = (rng.random_range(1..=15), rng.random_range(1..=15));
        let kernel = Array2::from_shape_fn(kdim, |_| rng.random_range(-1.0..1.0));
        let fast = fft_convolve_same(image.view(), kernel.view());
        let slow = direct(&image, &kernel);
        let scale = slow.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let err = fast.iter().zip(&slow).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale;
        worst = worst.max(err);
    }
    let msg = format!("worst relative error {worst:.2e} over 100 instances (want <= 1e-6)");
    if worst <= 1e-6 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn qus(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_qus")).args(args).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("qus {args:?} failed: {}", String::from_utf8_lossy(&out.stderr).trim()));
    }
    Ok(out.stdout)
}

fn throughput() -> Outcome {
    let stdout = qus(&["bench", "--axial", "2048", "--lateral", "256", "--runs", "10"])?;
    let v: serde_json::Value = serde_json::from_slice(&stdout).map_err(|e| e.to_string())?;
    let median = v["median_ms"].as_f64().ok_or("bench output has no median_ms")?;
    let msg = format!("median {median:.1} ms over 10 runs on {} cpus (want < 1000 ms)", v["cpus"]);
    if median < 1000.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn listing(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut v = Vec::new();
    for e in fs::read_dir(dir).map_err(|e| e.to_string())? {
        let p = e.map_err(|e| e.to_string())?.path();
        v.push((p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).map_err(|e| e.to_string())?));
    }
    v.sort();
    Ok(v)
}

fn format_and_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |name: &str, threads: &str| -> Result<Vec<(String, Vec<u8>)>, String> {
        let out = tmp.path().join(name);
        qus(&["generate", "--count", "8", "--seed", "42", "--threads", threads, "--out", out.to_str().unwrap()])?;
        listing(&out)
    };
    let one = run("a", "1")?;
    let eight = run("b", "8")?;
    let again = run("c", "1")?;
    if one.len() != 9 {
        return Err(format!("expected 8 samples and a manifest, found {} files", one.len()));
    }
    if one != eight || one != again {
        return Err("generated bytes differ between runs".into());
    }
    let mut round_trips = 0;
    for (name, bytes) in one.iter().filter(|(n, _)| n.ends_with(".qusd")) {
        let rec = decode(bytes).map_err(|e| format!("{name}: {e}"))?;
        let from_file = read_sample(&tmp.path().join("a").join(name)).map_err(|e| e.to_string())?;
        if encode(&rec).map_err(|e| e.to_string())? != *bytes || from_file != rec {
            return Err(format!("{name} does not round trip"));
        }
        round_trips += 1;
    }
    Ok(format!("{round_trips} files round trip byte-identically; 1 vs 8 threads and repeat runs identical"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("rayleigh_limit", Duration::from_secs(10), rayleigh_limit),
        ("nakagami_limits", Duration::from_secs(30), nakagami_limits),
        ("ml_estimator_recovery", Duration::from_secs(5), ml_recovery),
        ("reference_classifier", Duration::from_secs(60), reference_classifier),
        ("convolution_oracle", Duration::from_secs(5), convolution_oracle),
        ("throughput", Duration::from_secs(120), throughput),
        ("format_and_determinism", Duration::from_secs(300), format_and_determinism),
    ];
    let mut failed = 0;
    for (name, limit, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if elapsed <= limit => (true, d),
            Ok(d) => (false, format!("{d}; took longer than {limit:?}")),
            Err(d) => (false, d),
        };
        println!("{} {name}: {detail} [{:.2} s]", if ok { "PASS" } else { "FAIL" }, elapsed.as_secs_f64());
        failed += usize::from(!ok);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
