use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use spatter::io;

use crate::error::CliError;

/// Digest of one input file consumed by a run.
#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Reproducibility record written next to every command's outputs.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub config_sha256: String,
    pub inputs: Vec<InputDigest>,
}

impl Manifest {
    pub fn new(command: &str, seed: u64, config_sha256: &str) -> Self {
        Manifest {
            tool: "spatter",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            seed,
            config_sha256: config_sha256.to_string(),
            inputs: Vec::new(),
        }
    }

    /// Digests one input file and records it.
    pub fn add_input(&mut self, path: &Path) -> Result<(), CliError> {
        self.inputs.push(digest_input(path)?);
        Ok(())
    }

    /// Records digests computed elsewhere (e.g. in a parallel pass).
    pub fn extend_inputs(&mut self, digests: impl IntoIterator<Item = InputDigest>) {
        self.inputs.extend(digests);
    }

    /// Writes `manifest.json` into the output directory, inputs sorted by
    /// path so the file is byte-identical across runs.
    pub fn write(mut self, out_dir: &Path) -> Result<PathBuf, CliError> {
        self.inputs.sort_by(|a, b| a.path.cmp(&b.path));
        let path = out_dir.join("manifest.json");
        io::write_json_9sig(&path, &self)?;
        Ok(path)
    }
}

pub fn digest_input(path: &Path) -> Result<InputDigest, CliError> {
    let bytes = fs::read(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    Ok(InputDigest {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}
