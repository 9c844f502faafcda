//! Atomic artifact writing and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{CliError, Subcommand};

/// Write `bytes` to `path` through a temporary sibling and a rename, so a
/// reader never observes a partially written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "artifact".into());
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Identity of a run. Identical manifests produce byte-identical artifacts;
/// the manifest carries no timestamps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: Subcommand,
    pub config: Option<String>,
    pub seed: u64,
    pub output_dir: String,
    /// Relative artifact path to SHA-256 of its contents.
    pub files: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn file_name(subcommand: Subcommand) -> String {
        format!("manifest.{}.json", subcommand.name())
    }
}

/// Collects the artifacts of one subcommand under an output directory.
pub struct OutputDir {
    root: PathBuf,
    files: BTreeMap<String, String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            files: BTreeMap::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        write_atomic(&path, bytes)?;
        self.files.insert(rel.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(rel, text.as_bytes())
    }

    /// Write the manifest listing every artifact of this run and return it.
    pub fn finish(
        self,
        subcommand: Subcommand,
        config: Option<&Path>,
        seed: u64,
    ) -> Result<RunManifest, CliError> {
        let manifest = RunManifest {
            tool: "dimcert".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            subcommand,
            config: config.map(|p| p.display().to_string()),
            seed,
            output_dir: self.root.display().to_string(),
            files: self.files,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        write_atomic(&self.root.join(RunManifest::file_name(subcommand)), text.as_bytes())?;
        Ok(manifest)
    }
}
