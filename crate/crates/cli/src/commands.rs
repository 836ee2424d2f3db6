use std::path::{Path, PathBuf};
use std::time::Instant;

use qus_core::dataset::record::{
    class_map_record, insert, kind, parametric_record, read_envelope, read_parametric, tensor,
};
use qus_core::dataset::{generate_dataset, read_sample, write_sample, DatasetConfig, SampleRecord, Tensor};
use qus_core::phantom::{density_to_bernoulli_p, sample_scatterer_map};
use qus_core::seed::{self, tag};
use qus_core::sim::resolution_cell_extent;
use qus_core::stats::correlation_cell_size;
use qus_core::{
    build_psf, detect_envelope, generate_region_masks, log_compress, parametric_image, reference_classify, simulate_rf,
    summarize_homogeneous, AssignmentRanges, Error, GridSpec, ImagingParams, ParamRanges, ParametricImage, Real,
    ReferenceProfile, RegionAssignment, RegionMasks, Result, ShapeConfig, SpeckleClass, Statistic, WindowSpec,
};
use serde_json::{json, Map, Value};

use crate::args::{
    BenchArgs, CellSource, ClassifyArgs, Command, Estimator, GenerateArgs, PhysicsArgs, Precision, RescellArgs,
    SimulateArgs, StatsArgs,
};

/// Homogeneous phantoms at or above this density carry the FDS label.
const FDS_MIN_DENSITY: f64 = 10.0;

pub struct Report {
    pub json: Value,
    pub text: String,
}

pub fn run(command: &Command) -> Result<Report> {
    match command {
        Command::Generate(a) => generate(a),
        Command::Simulate(a) => simulate(a),
        Command::Stats(a) => stats(a),
        Command::Classify(a) => classify(a),
        Command::Rescell(a) => rescell(a),
        Command::Bench(a) => bench(a),
    }
}

fn generate(a: &GenerateArgs) -> Result<Report> {
    let n_test = a.test_count.unwrap_or(a.count / 6);
    if n_test > a.count {
        return Err(Error::Config(format!("test count {n_test} exceeds total count {}", a.count)));
    }
    let mut cfg = DatasetConfig::with_counts(a.count - n_test, n_test);
    cfg.n_axial = a.axial;
    cfg.n_lateral = a.lateral;
    cfg.train_mask_pool = a.train_masks;
    cfg.test_mask_pool = a.test_masks;
    cfg.store_rf = !a.no_rf;
    if a.no_nakagami {
        cfg.nakagami_window = None;
    }
    let progress = |done: usize, total: usize| eprintln!("generate: {done}/{total} samples");
    let manifest = generate_dataset(&cfg, a.seed, &a.out, a.threads.map(|t| t as usize), Some(&progress))?;
    let manifest_path = a.out.join(qus_core::dataset::MANIFEST_FILE);
    Ok(Report {
        json: json!({
            "out": a.out,
            "manifest": manifest_path,
            "master_seed": a.seed,
            "n_samples": manifest.n_samples,
            "n_train": cfg.n_train,
            "n_test": cfg.n_test,
        }),
        text: format!(
            "wrote {} samples ({} train, {} test) and {}",
            manifest.n_samples,
            cfg.n_train,
            cfg.n_test,
            manifest_path.display()
        ),
    })
}

fn default_params() -> ImagingParams {
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

fn apply_physics(mut p: ImagingParams, a: &PhysicsArgs) -> Result<ImagingParams> {
    if let Some(v) = a.fc {
        p.f_c = v;
    }
    if let Some(v) = a.fs {
        p.f_s = v;
    }
    if let Some(v) = a.sound_speed {
        p.v = v;
    }
    if let Some(v) = a.sigma_a {
        p.sigma_a = v;
    }
    if let Some(v) = a.sigma_l {
        p.sigma_l = v;
    }
    if let Some(v) = a.f_number {
        p.f_number = v;
    }
    if let Some(v) = a.pulses {
        p.n_pulses = v;
    }
    if let Some(v) = a.noise {
        p.noise_std = v;
    }
    p.validate()?;
    Ok(p)
}

fn homogeneous(grid: &GridSpec, density: f64, mu_s: f64, sigma_s: f64) -> (RegionMasks, RegionAssignment) {
    let label = u8::from(density >= FDS_MIN_DENSITY);
    (RegionMasks::uniform(grid, label, 0), RegionAssignment::homogeneous(density, mu_s, sigma_s))
}

fn simulate(a: &SimulateArgs) -> Result<Report> {
    let base = if a.random_params {
        ParamRanges::default().sample(&mut seed::rng_for(a.seed, &[tag::PARAMS]))
    } else {
        default_params()
    };
    let params = apply_physics(base, &a.physics)?;
    let grid = params.grid(a.axial, a.lateral, a.physics.lateral_pitch)?;
    let (masks, assignment, phantom) = match a.density {
        Some(d) => {
            let (m, asg) = homogeneous(&grid, d, a.mu_s, a.sigma_s);
            (m, asg, "homogeneous")
        }
        None => (
            generate_region_masks(a.seed, &grid, &ShapeConfig::default())?,
            AssignmentRanges::default().sample(&mut seed::rng_for(a.seed, &[tag::ASSIGN])),
            "random",
        ),
    };
    let map = sample_scatterer_map::<f64>(&masks, &assignment, (params.sigma_a, params.sigma_l), &grid, a.seed)?;
    let psf = build_psf(&params, &grid)?;
    let rf = simulate_rf(&map, &psf, &params, a.seed)?;
    let env = detect_envelope(&rf);
    let bmode = log_compress(&env, a.dynamic_range)?;

    let mut meta = Map::new();
    meta.insert("kind".into(), Value::from(kind::FRAME));
    meta.insert("phantom".into(), Value::from(phantom));
    insert(&mut meta, "seed", &a.seed)?;
    insert(&mut meta, "grid", &grid)?;
    insert(&mut meta, "params", &params)?;
    insert(&mut meta, "assignment", &assignment)?;
    let p = [
        density_to_bernoulli_p(assignment.density_per_cell[0], params.sigma_a, params.sigma_l, &grid)?,
        density_to_bernoulli_p(assignment.density_per_cell[1], params.sigma_a, params.sigma_l, &grid)?,
    ];
    insert(&mut meta, "bernoulli_p", &p)?;
    insert(&mut meta, "resolution_cell", &resolution_cell_extent(&params))?;
    insert(&mut meta, "dynamic_range_db", &a.dynamic_range)?;
    let mut rec = SampleRecord::new(meta);
    rec.push(Tensor::f32_from(tensor::RF, rf.data.view()));
    rec.push(Tensor::f32_from(tensor::ENVELOPE, env.data.view()));
    rec.push(Tensor::f32_from(tensor::BMODE, bmode.data.view()));
    rec.push(Tensor::u8_from(tensor::SC_MASK, masks.sc.view()));
    rec.push(Tensor::u8_from(tensor::MS_MASK, masks.ms.view()));
    write_sample(&rec, &a.out)?;

    Ok(Report {
        json: json!({
            "out": a.out,
            "seed": a.seed,
            "phantom": phantom,
            "grid": grid,
            "params": params,
            "assignment": assignment,
        }),
        text: format!(
            "wrote {} ({} phantom, {}x{} grid, pitch {:.5}x{:.3} mm)",
            a.out.display(),
            phantom,
            grid.n_axial,
            grid.n_lateral,
            grid.d_axial,
            grid.d_lateral
        ),
    })
}

fn statistic(e: Estimator) -> Statistic {
    match e {
        Estimator::Snr => Statistic::Snr,
        Estimator::Skewness => Statistic::Skewness,
        Estimator::Nakagami => Statistic::NakagamiM,
        Estimator::NakagamiOmega => Statistic::NakagamiOmega,
    }
}

fn derived_path(input: &Path, suffix: &str) -> PathBuf {
    let stem = input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    input.with_file_name(format!("{stem}.{suffix}.qusd"))
}

fn summary(values: impl Iterator<Item = f64>) -> Value {
    let mut finite: Vec<f64> = Vec::new();
    let mut invalid = 0usize;
    for v in values {
        if v.is_finite() {
            finite.push(v);
        } else {
            invalid += 1;
        }
    }
    if finite.is_empty() {
        return json!({ "valid": 0, "invalid": invalid });
    }
    finite.sort_by(f64::total_cmp);
    let n = finite.len();
    json!({
        "valid": n,
        "invalid": invalid,
        "mean": finite.iter().sum::<f64>() / n as f64,
        "median": median_sorted(&finite),
        "min": finite[0],
        "max": finite[n - 1],
    })
}

fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn stats(a: &StatsArgs) -> Result<Report> {
    let rec = read_sample(&a.input)?;
    let env = read_envelope::<f64>(&rec)?;
    let mut window = WindowSpec::new(a.window.0, a.window.1);
    if let Some(s) = a.stride {
        window = window.with_stride(s.0, s.1);
    }
    window.min_cell_multiple = a.min_cell_multiple;
    let cell = match a.cell {
        CellSource::Psf => Some(resolution_cell_extent(&env.params)),
        CellSource::Measured => Some(correlation_cell_size(&env)?),
        CellSource::None => None,
    };
    let stat = statistic(a.estimator);
    let image = parametric_image(&env, &window, stat, cell.as_ref())?;
    let out = a.out.clone().unwrap_or_else(|| derived_path(&a.input, stat.name()));
    write_sample(&parametric_record(&image, Some(&env.params))?, &out)?;

    let values = summary(image.values.iter().copied());
    let (rows, cols) = image.values.dim();
    Ok(Report {
        text: format!(
            "wrote {} ({} map, {rows}x{cols} windows, mean {})",
            out.display(),
            stat.name(),
            values.get("mean").and_then(Value::as_f64).map_or("n/a".into(), |m| format!("{m:.4}"))
        ),
        json: json!({
            "out": out,
            "statistic": stat,
            "window": window,
            "rows": rows,
            "cols": cols,
            "values": values,
        }),
    })
}

fn load_snr_map(path: &Path) -> Result<ParametricImage<f64>> {
    let map = read_parametric::<f64>(&read_sample(path)?)?;
    if map.statistic != Statistic::Snr {
        return Err(Error::Config(format!(
            "{} holds a {} map, classification needs snr",
            path.display(),
            map.statistic.name()
        )));
    }
    Ok(map)
}

fn classify(a: &ClassifyArgs) -> Result<Report> {
    let tests = a.input.iter().map(|p| load_snr_map(p)).collect::<Result<Vec<_>>>()?;
    let refs = a.reference.iter().map(|p| load_snr_map(p)).collect::<Result<Vec<_>>>()?;
    let test = ParametricImage::average(&tests)?;
    let profile = ReferenceProfile::from_snr_images(&refs)?;
    let map = reference_classify(&test, &profile, a.tolerance)?;
    let out = a.out.clone().unwrap_or_else(|| derived_path(&a.input[0], "class"));
    write_sample(&class_map_record(&map, profile.frames_used)?, &out)?;

    // label fractions; the true label is unknown here so accuracy is not reported
    let s = summarize_homogeneous(&map, SpeckleClass::Fds);
    Ok(Report {
        text: format!(
            "wrote {} ({} windows: UDS {:.3}, FDS {:.3}, periodic {:.3})",
            out.display(),
            s.windows,
            s.fraction_uds,
            s.fraction_fds,
            s.fraction_periodic
        ),
        json: json!({
            "out": out,
            "tolerance": a.tolerance,
            "window": map.window,
            "test_frames": tests.len(),
            "reference_frames": profile.frames_used,
            "windows": s.windows,
            "fraction_uds": s.fraction_uds,
            "fraction_fds": s.fraction_fds,
            "fraction_periodic": s.fraction_periodic,
        }),
    })
}

fn rescell(a: &RescellArgs) -> Result<Report> {
    let env = read_envelope::<f64>(&read_sample(&a.input)?)?;
    let measured = correlation_cell_size(&env)?;
    let psf = resolution_cell_extent(&env.params);
    Ok(Report {
        text: format!(
            "measured {:.4} x {:.4} mm (axial x lateral), PSF -6 dB {:.4} x {:.4} mm",
            measured.axial_mm, measured.lateral_mm, psf.axial_mm, psf.lateral_mm
        ),
        json: json!({
            "measured": measured,
            "measured_pixels": measured.area_pixels(&env.grid),
            "psf": psf,
            "psf_pixels": psf.area_pixels(&env.grid),
            "grid": env.grid,
        }),
    })
}

fn bench_run<T: Real>(params: &ImagingParams, grid: &GridSpec, density: f64, seed: u64) -> Result<f64> {
    let (masks, assignment) = homogeneous(grid, density, 1.0, 0.03);
    let start = Instant::now();
    let map = sample_scatterer_map::<T>(&masks, &assignment, (params.sigma_a, params.sigma_l), grid, seed)?;
    let psf = build_psf::<T>(params, grid)?;
    let rf = simulate_rf(&map, &psf, params, seed)?;
    let env = detect_envelope(&rf);
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    std::hint::black_box(env);
    Ok(elapsed)
}

fn bench(a: &BenchArgs) -> Result<Report> {
    let params = apply_physics(default_params(), &a.physics)?;
    let grid = params.grid(a.axial, a.lateral, a.physics.lateral_pitch)?;
    let run = |i: u64| match a.precision {
        Precision::F32 => bench_run::<f32>(&params, &grid, a.density, seed::derive(a.seed, &[i])),
        Precision::F64 => bench_run::<f64>(&params, &grid, a.density, seed::derive(a.seed, &[i])),
    };
    // one untimed run warms the FFT planner and allocator
    run(u64::MAX)?;
    let timings = (0..a.runs as u64).map(run).collect::<Result<Vec<f64>>>()?;
    let mut sorted = timings.clone();
    sorted.sort_by(f64::total_cmp);
    let median = median_sorted(&sorted);
    let cpus = std::thread::available_parallelism().map_or(1, |n| n.get());
    Ok(Report {
        text: format!("median {median:.1} ms over {} runs ({}x{}, {} cpus)", a.runs, a.axial, a.lateral, cpus),
        json: json!({
            "axial": a.axial,
            "lateral": a.lateral,
            "runs": a.runs,
            "precision": match a.precision { Precision::F32 => "f32", Precision::F64 => "f64" },
            "cpus": cpus,
            "median_ms": median,
            "min_ms": sorted[0],
            "max_ms": sorted[sorted.len() - 1],
            "mean_ms": timings.iter().sum::<f64>() / timings.len() as f64,
            "timings_ms": timings,
        }),
    })
}
