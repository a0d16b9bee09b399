//! `manifest.toml`: what a run directory contains, with a SHA-256 per file
//! so that copies can be checked without rerunning.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST_NAME: &str = "manifest.toml";
pub const MANIFEST_SCHEMA: &str = "leray-deconv-run";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the run directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    pub version: u32,
    /// Crate version that wrote the directory.
    pub producer: String,
    pub config: String,
    pub config_sha256: String,
    /// `"complete"` or `"blow_up"`.
    pub status: String,
    pub steps: u64,
    pub files: Vec<FileEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Manifest {
    pub fn new(config_path: &str, config_bytes: &[u8]) -> Self {
        Manifest {
            schema: MANIFEST_SCHEMA.into(),
            version: MANIFEST_VERSION,
            producer: format!("leray-deconv {}", env!("CARGO_PKG_VERSION")),
            config: config_path.into(),
            config_sha256: sha256_hex(config_bytes),
            status: "complete".into(),
            steps: 0,
            files: Vec::new(),
        }
    }

    pub fn add(&mut self, path: &str, contents: &[u8]) {
        self.files.push(FileEntry {
            path: path.into(),
            sha256: sha256_hex(contents),
            bytes: contents.len() as u64,
        });
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_NAME);
        std::fs::write(&path, self.to_toml()).map_err(|e| Error::io(&path, e))
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_NAME);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let m: Manifest = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(0),
            message: e.message().to_string(),
        })?;
        if m.schema != MANIFEST_SCHEMA {
            return Err(Error::Format(format!("{} is not a run manifest", path.display())));
        }
        if m.version > MANIFEST_VERSION {
            return Err(Error::Format(format!(
                "manifest version {} is newer than supported version {MANIFEST_VERSION}",
                m.version
            )));
        }
        Ok(m)
    }

    /// Entries whose on-disk contents no longer match the recorded hash.
    pub fn verify(&self, dir: &Path) -> Result<Vec<String>> {
        let mut bad = Vec::new();
        for f in &self.files {
            let p = dir.join(&f.path);
            let bytes = std::fs::read(&p).map_err(|e| Error::io(&p, e))?;
            if sha256_hex(&bytes) != f.sha256 || bytes.len() as u64 != f.bytes {
                bad.push(f.path.clone());
            }
        }
        Ok(bad)
    }

    pub fn snapshot_paths(&self) -> impl Iterator<Item = &str> {
        self.files
            .iter()
            .map(|f| f.path.as_str())
            .filter(|p| p.ends_with(".ldsnap"))
    }
}
