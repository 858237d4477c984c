//! Report envelope, input digests and atomic file output.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const TOOL: &str = "reebforge";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub name: String,
    pub source: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn new(name: &str, source: &str, bytes: &[u8]) -> Self {
        InputDigest {
            name: name.to_string(),
            source: source.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
        }
    }
}

/// Fields serialize in declaration order, so identical runs give identical bytes.
#[derive(Debug, Serialize)]
pub struct Report<T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub inputs: Vec<InputDigest>,
    pub result: T,
    pub pass: bool,
}

impl<T: Serialize> Report<T> {
    pub fn new(command: String, inputs: Vec<InputDigest>, result: T, pass: bool) -> Self {
        Report {
            tool: TOOL,
            version: VERSION,
            command,
            inputs,
            result,
            pass,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// Writes through a temporary file in the destination directory and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temporary file in {}", dir.display()))?;
    tmp.write_all(contents)?;
    tmp.flush()?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
