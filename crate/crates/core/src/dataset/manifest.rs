use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::container::{sha256_hex, write_atomic};
use super::generate::DatasetConfig;
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub split: Split,
    /// Position within the split.
    pub index: usize,
    pub sample_seed: u64,
    pub mask_seed: u64,
    /// SHA-256 of the whole file.
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub n_samples: usize,
    pub master_seed: u64,
    pub config: DatasetConfig,
    pub samples: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: Manifest = serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        if m.format_version != MANIFEST_VERSION {
            return Err(Error::UnsupportedVersion(m.format_version));
        }
        Ok(m)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.samples.iter().filter(move |e| e.split == split)
    }

    /// Checks the sample count and every file digest under `dir`.
    pub fn verify(&self, dir: &Path) -> Result<()> {
        if self.samples.len() != self.n_samples {
            return Err(Error::Format(format!(
                "manifest lists {} samples but n_samples is {}",
                self.samples.len(),
                self.n_samples
            )));
        }
        for entry in &self.samples {
            let path = dir.join(&entry.file);
            let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            if sha256_hex(&bytes) != entry.sha256 {
                return Err(Error::DigestMismatch { what: entry.file.clone() });
            }
        }
        self.check_split_hygiene()
    }

    /// No mask seed may be shared between the train and test partitions.
    pub fn check_split_hygiene(&self) -> Result<()> {
        let train: HashSet<u64> = self.split(Split::Train).map(|e| e.mask_seed).collect();
        if let Some(e) = self.split(Split::Test).find(|e| train.contains(&e.mask_seed)) {
            return Err(Error::Format(format!("mask seed {:#x} of {} also appears in train", e.mask_seed, e.file)));
        }
        Ok(())
    }
}
