//! Run manifests: config echo, per-check verdicts, and a content-hash
//! inventory of every emitted data file.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

#[derive(Debug, Clone, Serialize)]
pub struct FileRecord {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub toolkit_version: String,
    pub experiment: String,
    pub config: ExperimentConfig,
    /// Timing only; never feeds back into any computation.
    pub wall_time_seconds: f64,
    pub verdicts: BTreeMap<String, bool>,
    pub files: Vec<FileRecord>,
}

impl RunManifest {
    pub fn all_passed(&self) -> bool {
        self.verdicts.values().all(|&v| v)
    }

    /// Writes `manifest.json` atomically (temp file + rename).
    pub fn write_atomic(&self, dir: &Path) -> std::io::Result<()> {
        let tmp = dir.join("manifest.json.tmp");
        let target = dir.join("manifest.json");
        let body = serde_json::to_vec_pretty(self).expect("manifest serialization");
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&body)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &target)
    }
}

/// Collects data files as they are written, recording content hashes.
pub struct OutputDir {
    dir: PathBuf,
    files: Vec<FileRecord>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(OutputDir { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn write_file(&mut self, name: &str, contents: &[u8]) -> std::io::Result<()> {
        fs::write(self.dir.join(name), contents)?;
        let mut hasher = Sha256::new();
        hasher.update(contents);
        let digest = hasher.finalize();
        let mut hex = String::with_capacity(64);
        for byte in digest.as_slice() {
            let _ = std::fmt::Write::write_fmt(&mut hex, format_args!("{byte:02x}"));
        }
        self.files.push(FileRecord {
            name: name.to_string(),
            bytes: contents.len() as u64,
            sha256: hex,
        });
        Ok(())
    }

    pub fn into_records(mut self) -> Vec<FileRecord> {
        self.files.sort_by(|a, b| a.name.cmp(&b.name));
        self.files
    }
}
