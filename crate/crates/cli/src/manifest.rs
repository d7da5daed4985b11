//! Run manifests written next to every output.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub role: &'static str,
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub options: Value,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
    pub seed: Option<u64>,
    pub warnings: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &'static str, options: Value, seed: Option<u64>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            options,
            inputs: Vec::new(),
            outputs: Vec::new(),
            seed,
            warnings: Vec::new(),
        }
    }

    /// Reads an input file, recording its digest.
    pub fn read_input(&mut self, role: &'static str, path: &Path) -> Result<String> {
        let bytes = fs::read(path).with_context(|| format!("cannot read {role} file {}", path.display()))?;
        self.inputs.push(InputDigest {
            role,
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        String::from_utf8(bytes).with_context(|| format!("{role} file {} is not UTF-8", path.display()))
    }

    pub fn write_output(&mut self, path: &Path, contents: &str) -> Result<()> {
        fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))?;
        self.outputs.push(path.display().to_string());
        Ok(())
    }

    /// Prints a warning to standard error and keeps it for the manifest.
    pub fn warn(&mut self, message: String) {
        eprintln!("warning: {message}");
        self.warnings.push(message);
    }

    /// Writes `<primary>.manifest.json`.
    pub fn finish(self, primary: &Path) -> Result<()> {
        let path = sibling(primary, "manifest.json");
        let json = serde_json::to_string_pretty(&self)? + "\n";
        fs::write(&path, json).with_context(|| format!("cannot write {}", path.display()))
    }
}

/// `<path>.<suffix>`, keeping the original extension.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".");
    name.push(suffix);
    PathBuf::from(name)
}
