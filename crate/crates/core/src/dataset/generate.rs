use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::container::{encode, sha256_hex, write_atomic, SampleRecord, Tensor};
use super::manifest::{Manifest, ManifestEntry, Split, MANIFEST_FILE, MANIFEST_VERSION};
use super::record::{attach_parametric, insert, kind, tensor};
use crate::error::{Error, Result};
use crate::phantom::{
    density_to_bernoulli_p, generate_region_masks, sample_scatterer_map, AssignmentRanges, ShapeConfig,
};
use crate::seed::{self, tag};
use crate::sim::{
    build_psf, detect_envelope, log_compress, resolution_cell_extent, simulate_rf, ParamRanges,
    DEFAULT_DYNAMIC_RANGE_DB, DEFAULT_LATERAL_PITCH_MM,
};
use crate::stats::{parametric_image, Statistic, WindowSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub n_train: usize,
    pub n_test: usize,
    pub n_axial: usize,
    pub n_lateral: usize,
    pub d_lateral: f64,
    /// Number of distinct train mask seeds; samples cycle through the pool.
    /// `None` gives every sample its own masks.
    pub train_mask_pool: Option<usize>,
    pub test_mask_pool: Option<usize>,
    pub shapes: ShapeConfig,
    pub params: ParamRanges,
    pub assignment: AssignmentRanges,
    pub dynamic_range_db: f64,
    /// Window of the stored Nakagami m map, if any.
    pub nakagami_window: Option<WindowSpec>,
    pub store_rf: bool,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            n_train: 500,
            n_test: 100,
            n_axial: 1024,
            n_lateral: 256,
            d_lateral: DEFAULT_LATERAL_PITCH_MM,
            train_mask_pool: None,
            test_mask_pool: None,
            shapes: ShapeConfig::default(),
            params: ParamRanges::default(),
            assignment: AssignmentRanges::default(),
            dynamic_range_db: DEFAULT_DYNAMIC_RANGE_DB,
            nakagami_window: Some(WindowSpec::new(128, 64).with_stride(32, 16)),
            store_rf: true,
        }
    }
}

impl DatasetConfig {
    pub fn with_counts(n_train: usize, n_test: usize) -> Self {
        DatasetConfig { n_train, n_test, ..Default::default() }
    }

    pub fn n_samples(&self) -> usize {
        self.n_train + self.n_test
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples() == 0 {
            return Err(Error::Config("dataset needs at least one sample".into()));
        }
        if self.train_mask_pool == Some(0) || self.test_mask_pool == Some(0) {
            return Err(Error::Config("mask pools must be non-empty".into()));
        }
        if !(self.dynamic_range_db > 0.0) {
            return Err(Error::Config("dynamic range must be positive".into()));
        }
        if let Some(w) = &self.nakagami_window {
            w.validate()?;
        }
        self.shapes.validate()
    }

    fn mask_seed(&self, master_seed: u64, split: Split, index: usize) -> u64 {
        let (split_tag, pool) = match split {
            Split::Train => (tag::TRAIN_MASK, self.train_mask_pool),
            Split::Test => (tag::TEST_MASK, self.test_mask_pool),
        };
        let slot = pool.map_or(index, |p| index % p);
        seed::derive(master_seed, &[split_tag, slot as u64])
    }

    /// Sample positions in manifest order: all train samples, then test.
    fn slots(&self) -> Vec<(Split, usize)> {
        (0..self.n_train).map(|i| (Split::Train, i)).chain((0..self.n_test).map(|i| (Split::Test, i))).collect()
    }
}

pub fn sample_file_name(split: Split, index: usize) -> String {
    format!("{}_{index:05}.qusd", split.name())
}

/// Per-sample seeds derived from the master seed.
pub fn sample_seeds(cfg: &DatasetConfig, master_seed: u64, split: Split, index: usize) -> (u64, u64) {
    let split_tag = match split {
        Split::Train => tag::TRAIN_MASK,
        Split::Test => tag::TEST_MASK,
    };
    let sample_seed = seed::derive(master_seed, &[tag::SAMPLE, split_tag, index as u64]);
    (sample_seed, cfg.mask_seed(master_seed, split, index))
}

/// Runs masks, assignment, scatterer map, RF, envelope, B-mode and the
/// optional Nakagami map for one sample.
pub fn simulate_sample(cfg: &DatasetConfig, master_seed: u64, split: Split, index: usize) -> Result<SampleRecord> {
    let (sample_seed, mask_seed) = sample_seeds(cfg, master_seed, split, index);
    let params = cfg.params.sample(&mut seed::rng_for(sample_seed, &[tag::PARAMS]));
    let assignment = cfg.assignment.sample(&mut seed::rng_for(sample_seed, &[tag::ASSIGN]));
    let grid = params.grid(cfg.n_axial, cfg.n_lateral, cfg.d_lateral)?;
    let masks = generate_region_masks(mask_seed, &grid, &cfg.shapes)?;
    let map = sample_scatterer_map::<f64>(&masks, &assignment, (params.sigma_a, params.sigma_l), &grid, sample_seed)?;
    let psf = build_psf(&params, &grid)?;
    let rf = simulate_rf(&map, &psf, &params, sample_seed)?;
    let env = detect_envelope(&rf);
    let bmode = log_compress(&env, cfg.dynamic_range_db)?;
    let cell = resolution_cell_extent(&params);

    let mut meta = Map::new();
    meta.insert("kind".into(), Value::from(kind::SAMPLE));
    insert(&mut meta, "split", &split)?;
    insert(&mut meta, "index", &index)?;
    insert(&mut meta, "master_seed", &master_seed)?;
    insert(&mut meta, "sample_seed", &sample_seed)?;
    insert(&mut meta, "mask_seed", &mask_seed)?;
    insert(&mut meta, "grid", &grid)?;
    insert(&mut meta, "params", &params)?;
    insert(&mut meta, "assignment", &assignment)?;
    let p = [
        density_to_bernoulli_p(assignment.density_per_cell[0], params.sigma_a, params.sigma_l, &grid)?,
        density_to_bernoulli_p(assignment.density_per_cell[1], params.sigma_a, params.sigma_l, &grid)?,
    ];
    insert(&mut meta, "bernoulli_p", &p)?;
    insert(&mut meta, "resolution_cell", &cell)?;
    insert(&mut meta, "dynamic_range_db", &cfg.dynamic_range_db)?;

    let mut rec = SampleRecord::new(meta);
    if cfg.store_rf {
        rec.push(Tensor::f32_from(tensor::RF, rf.data.view()));
    }
    rec.push(Tensor::f32_from(tensor::ENVELOPE, env.data.view()));
    rec.push(Tensor::f32_from(tensor::BMODE, bmode.data.view()));
    rec.push(Tensor::u8_from(tensor::SC_MASK, masks.sc.view()));
    rec.push(Tensor::u8_from(tensor::MS_MASK, masks.ms.view()));
    if let Some(window) = &cfg.nakagami_window {
        let m = parametric_image(&env, window, Statistic::NakagamiM, Some(&cell))?;
        attach_parametric(&mut rec, &m)?;
    }
    Ok(rec)
}

/// Progress callback: `(finished, total)`.
pub type Progress<'a> = &'a (dyn Fn(usize, usize) + Sync);

/// Writes every sample of `cfg` into `out_dir` and then the manifest.
///
/// Output bytes depend only on `cfg` and `master_seed`, not on `threads`
/// (`None` uses all cores). On failure the files written so far are
/// removed, no manifest is written and the failing sample's manifest
/// position is reported.
pub fn generate_dataset(
    cfg: &DatasetConfig,
    master_seed: u64,
    out_dir: &Path,
    threads: Option<usize>,
    progress: Option<Progress<'_>>,
) -> Result<Manifest> {
    cfg.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;

    let slots = cfg.slots();
    let total = slots.len();
    let done = AtomicUsize::new(0);
    let results: Vec<Result<ManifestEntry>> = pool.install(|| {
        slots
            .par_iter()
            .enumerate()
            .map(|(pos, &(split, index))| {
                let entry = write_one(cfg, master_seed, out_dir, split, index)
                    .map_err(|e| Error::Sample { index: pos, source: Box::new(e) });
                let finished = done.fetch_add(1, Ordering::Relaxed) + 1;
                if let Some(cb) = progress {
                    cb(finished, total);
                }
                entry
            })
            .collect()
    });

    if results.iter().any(Result::is_err) {
        for (split, index) in &slots {
            let _ = fs::remove_file(out_dir.join(sample_file_name(*split, *index)));
        }
        return Err(results.into_iter().find_map(Result::err).expect("an error is present"));
    }

    let manifest = Manifest {
        format_version: MANIFEST_VERSION,
        n_samples: total,
        master_seed,
        config: cfg.clone(),
        samples: results.into_iter().map(|r| r.expect("checked above")).collect(),
    };
    manifest.save(&out_dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

fn write_one(
    cfg: &DatasetConfig,
    master_seed: u64,
    out_dir: &Path,
    split: Split,
    index: usize,
) -> Result<ManifestEntry> {
    let rec = simulate_sample(cfg, master_seed, split, index)?;
    let bytes = encode(&rec)?;
    let file = sample_file_name(split, index);
    write_atomic(&out_dir.join(&file), &bytes)?;
    let (sample_seed, mask_seed) = sample_seeds(cfg, master_seed, split, index);
    Ok(ManifestEntry { file, split, index, sample_seed, mask_seed, sha256: sha256_hex(&bytes) })
}
