//! QUSD sample files, dataset manifests and reproducible generation.

pub mod container;
mod generate;
mod manifest;
pub mod record;

pub use container::{decode, encode, read_sample, write_sample, DType, SampleRecord, Tensor, TensorData};
pub use generate::{generate_dataset, sample_file_name, sample_seeds, simulate_sample, DatasetConfig, Progress};
pub use manifest::{Manifest, ManifestEntry, Split, MANIFEST_FILE, MANIFEST_VERSION};
