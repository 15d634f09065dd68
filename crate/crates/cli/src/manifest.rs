//! Run manifests: every output file is listed with its SHA-256 checksum so
//! reruns can be verified byte for byte and interrupted runs resumed.
//! The creation timestamp lives only in the manifest itself and is never
//! part of any checksummed content.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{io_at, CliError};

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: String,
    pub command: String,
    pub config_sha256: String,
    pub master_seed: u64,
    pub tool_version: String,
    /// Wall-clock seconds when the manifest was written; informational only.
    pub created_unix: u64,
    /// Relative path -> SHA-256 of the file bytes.
    pub files: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Option<RunManifest> {
        let text = std::fs::read_to_string(path).ok()?;
        serde_json::from_str(&text).ok()
    }
}

/// Collects output files under one directory, skipping work whose results
/// from a previous identical run are already on disk and intact.
pub struct OutputWriter {
    root: PathBuf,
    manifest: RunManifest,
    previous: Option<RunManifest>,
}

impl OutputWriter {
    /// Open (and create) the command's output directory. A manifest from an
    /// earlier run only enables resume when config hash, seed and tool
    /// version all match.
    pub fn open(
        root: &Path,
        command: &str,
        config_sha256: &str,
        master_seed: u64,
    ) -> Result<OutputWriter, CliError> {
        std::fs::create_dir_all(root).map_err(|e| io_at(root, e))?;
        let manifest = RunManifest {
            schema_version: anderson_qed::SCHEMA_VERSION.to_string(),
            command: command.to_string(),
            config_sha256: config_sha256.to_string(),
            master_seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            created_unix: 0,
            files: BTreeMap::new(),
        };
        let previous = RunManifest::load(&root.join("manifest.json")).filter(|m| {
            m.config_sha256 == manifest.config_sha256
                && m.master_seed == manifest.master_seed
                && m.tool_version == manifest.tool_version
        });
        Ok(OutputWriter {
            root: root.to_path_buf(),
            manifest,
            previous,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// True when the previous run already produced this file and its bytes
    /// still match the recorded checksum; the entry is carried forward.
    pub fn resume(&mut self, rel: &str) -> bool {
        let Some(prev) = &self.previous else {
            return false;
        };
        let Some(expected) = prev.files.get(rel) else {
            return false;
        };
        let Ok(bytes) = std::fs::read(self.root.join(rel)) else {
            return false;
        };
        if sha256_hex(&bytes) != *expected {
            return false;
        }
        self.manifest.files.insert(rel.to_string(), expected.clone());
        true
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| io_at(parent, e))?;
        }
        std::fs::write(&path, bytes).map_err(|e| io_at(&path, e))?;
        self.manifest
            .files
            .insert(rel.to_string(), sha256_hex(bytes));
        Ok(())
    }

    /// Write the manifest itself; call once after all files are recorded.
    pub fn finish(mut self) -> Result<(), CliError> {
        self.manifest.created_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let path = self.root.join("manifest.json");
        let mut text =
            serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| io_at(&path, e))
    }
}
