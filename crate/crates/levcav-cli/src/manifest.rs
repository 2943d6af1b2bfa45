//! Run manifest: config hash, toolkit version, seeds, and a checksum for
//! every emitted file. Deterministic runs reproduce it byte for byte.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Serialize)]
pub struct Manifest {
    pub toolkit_version: &'static str,
    pub command: String,
    pub config_sha256: String,
    pub seeds: Vec<u64>,
    /// Relative file path -> sha256, sorted by path.
    pub files: BTreeMap<String, String>,
}

/// Collects output files, refusing to overwrite without the explicit flag,
/// and writes the manifest last.
pub struct OutputWriter {
    root: PathBuf,
    overwrite: bool,
    manifest: Manifest,
}

impl OutputWriter {
    pub fn new(
        root: &Path,
        command: &str,
        config_sha256: String,
        seeds: Vec<u64>,
        overwrite: bool,
    ) -> CliResult<Self> {
        std::fs::create_dir_all(root)
            .map_err(|e| CliError::io(&format!("creating {}", root.display()), e))?;
        Ok(Self {
            root: root.to_path_buf(),
            overwrite,
            manifest: Manifest {
                toolkit_version: env!("CARGO_PKG_VERSION"),
                command: command.to_string(),
                config_sha256,
                seeds,
                files: BTreeMap::new(),
            },
        })
    }

    /// Write one output file and record its checksum.
    pub fn write(&mut self, name: &str, contents: &str) -> CliResult<PathBuf> {
        let path = self.root.join(name);
        if path.exists() && !self.overwrite {
            return Err(CliError::config(format!(
                "{} already exists; pass --overwrite to replace it",
                path.display()
            )));
        }
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::io(&format!("creating {}", parent.display()), e))?;
        }
        std::fs::write(&path, contents)
            .map_err(|e| CliError::io(&format!("writing {}", path.display()), e))?;
        self.manifest.files.insert(name.to_string(), sha256_hex(contents.as_bytes()));
        Ok(path)
    }

    /// Write `manifest.json` (always overwritten: it describes this run).
    pub fn finish(self) -> CliResult<PathBuf> {
        let path = self.root.join("manifest.json");
        let json = serde_json::to_string_pretty(&self.manifest)
            .expect("manifest serialization cannot fail");
        std::fs::write(&path, json)
            .map_err(|e| CliError::io(&format!("writing {}", path.display()), e))?;
        Ok(path)
    }
}
