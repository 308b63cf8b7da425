//! Run manifests: every command that writes artifacts also records what
//! produced them — tool version, command, seed, parameters and the digests
//! of all inputs — so a result can be traced back and reproduced.

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::formats::write_json;

/// SHA-256 of a file's contents, streamed in chunks, hex-encoded.
pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = fs::File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestInput {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: Option<u64>,
    pub parameters: BTreeMap<String, String>,
    /// Input files by role, each with its content digest.
    pub inputs: BTreeMap<String, ManifestInput>,
    /// Artifacts written next to this manifest.
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        RunManifest {
            tool: "trajtune".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed: None,
            parameters: BTreeMap::new(),
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn parameter(mut self, key: &str, value: impl ToString) -> Self {
        self.parameters.insert(key.into(), value.to_string());
        self
    }

    /// Registers an input file under a role name, hashing its contents.
    pub fn input(mut self, role: &str, path: &Path) -> Result<Self> {
        self.inputs.insert(
            role.into(),
            ManifestInput {
                path: path.display().to_string(),
                sha256: sha256_file(path)?,
            },
        );
        Ok(self)
    }

    pub fn output(mut self, path: &Path) -> Self {
        self.outputs.push(path.display().to_string());
        self
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}
