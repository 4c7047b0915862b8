//! Run manifest: every file a subcommand emits, with content checksums, so
//! reruns can be diffed byte-for-byte.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Serialize)]
struct ManifestDoc<'a> {
    subcommand: &'a str,
    config: Option<String>,
    output_dir: String,
    seed: Option<u64>,
    artifacts: Vec<ArtifactEntry>,
}

#[derive(Serialize)]
struct ArtifactEntry {
    path: String,
    sha256: String,
}

/// Collects artifacts as they are written and lands `manifest.json` last.
pub struct RunManifest {
    subcommand: String,
    config: Option<String>,
    output_dir: PathBuf,
    seed: Option<u64>,
    artifacts: Vec<ArtifactEntry>,
}

impl RunManifest {
    pub fn new(subcommand: &str, output_dir: &Path, config: Option<&Path>, seed: Option<u64>) -> Self {
        RunManifest {
            subcommand: subcommand.to_owned(),
            config: config.map(|p| p.display().to_string()),
            output_dir: output_dir.to_owned(),
            seed,
            artifacts: Vec::new(),
        }
    }

    /// Write one artifact into the output directory and record its checksum.
    pub fn write(&mut self, name: &str, contents: &str) -> std::io::Result<PathBuf> {
        fs::create_dir_all(&self.output_dir)?;
        let path = self.output_dir.join(name);
        fs::write(&path, contents)?;
        self.artifacts.push(ArtifactEntry {
            path: name.to_owned(),
            sha256: hex::encode(Sha256::digest(contents.as_bytes())),
        });
        Ok(path)
    }

    /// Write `manifest.json`. Returns the manifest path.
    pub fn finish(self) -> std::io::Result<PathBuf> {
        fs::create_dir_all(&self.output_dir)?;
        let doc = ManifestDoc {
            subcommand: &self.subcommand,
            config: self.config.clone(),
            output_dir: self.output_dir.display().to_string(),
            seed: self.seed,
            artifacts: self.artifacts,
        };
        let path = self.output_dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&doc).expect("manifest serialize"))?;
        Ok(path)
    }
}
