//! Run manifests: enough provenance to re-derive every output file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use colorsig::Result;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// Raw argv echo, so the exact invocation is reproducible.
    pub args: Vec<String>,
    pub seed: u64,
    /// SHA-256 of every input file, keyed by path.
    pub input_digests: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub wall_clock_secs: f64,
    pub version: String,
}

pub struct ManifestBuilder {
    command: String,
    seed: u64,
    inputs: BTreeMap<String, String>,
    outputs: Vec<String>,
    started: Instant,
}

impl ManifestBuilder {
    pub fn new(command: &str, seed: u64) -> Self {
        ManifestBuilder {
            command: command.to_string(),
            seed,
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path)?;
        let digest = Sha256::digest(&bytes);
        self.inputs
            .insert(path.display().to_string(), format!("{digest:x}"));
        Ok(())
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    /// Write `manifest-<command>.json` into `out_dir`.
    pub fn write(self, out_dir: &Path) -> Result<PathBuf> {
        let manifest = RunManifest {
            command: self.command.clone(),
            args: std::env::args().collect(),
            seed: self.seed,
            input_digests: self.inputs,
            outputs: self.outputs,
            wall_clock_secs: self.started.elapsed().as_secs_f64(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        };
        std::fs::create_dir_all(out_dir)?;
        let path = out_dir.join(format!("manifest-{}.json", self.command));
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
        Ok(path)
    }
}
