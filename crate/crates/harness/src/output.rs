//! Atomic report files and the reproducibility manifest.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{hex, ExperimentSpec};
use crate::error::{HarnessError, Result};

pub const MANIFEST: &str = "manifest.json";

/// Writes through a temporary file in the target directory and renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).map_err(|e| HarnessError::io(&dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| HarnessError::io(&dir, e))?;
    tmp.write_all(bytes).map_err(|e| HarnessError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| HarnessError::io(path, e))?;
    tmp.persist(path).map_err(|e| HarnessError::io(path, e.error))?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

/// A data file produced by a run, held in memory until the run succeeds.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn json<T: Serialize>(name: &str, value: &T) -> Result<Self> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| HarnessError::Invariant(e.to_string()))?;
        bytes.push(b'\n');
        Ok(Artifact { name: name.into(), bytes })
    }

    pub fn csv<T: Serialize>(name: &str, rows: &[T]) -> Result<Self> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r).map_err(|e| HarnessError::Invariant(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| HarnessError::Invariant(e.to_string()))?;
        Ok(Artifact { name: name.into(), bytes })
    }

    pub fn text(name: &str, text: String) -> Self {
        Artifact { name: name.into(), bytes: text.into_bytes() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFile {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub kind: String,
    pub spec_hash: String,
    pub seed: Option<u64>,
    pub wall_time_secs: f64,
    pub exit_code: i32,
    pub spec: ExperimentSpec,
    pub outputs: Vec<OutputFile>,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::config(format!("{}: {e}", path.display())))
    }
}

/// Writes the artifacts into `dir`, returning their checksums.
pub fn write_all(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<OutputFile>> {
    artifacts
        .iter()
        .map(|a| {
            write_atomic(&dir.join(&a.name), &a.bytes)?;
            Ok(OutputFile { name: a.name.clone(), sha256: sha256_hex(&a.bytes), bytes: a.bytes.len() as u64 })
        })
        .collect()
}
