//! Run manifests: tool version, resolved configuration, and output checksums.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Serialize)]
pub struct OutputRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Serialize)]
pub struct Manifest<C: Serialize> {
    pub tool: ToolInfo,
    pub command: &'static str,
    pub config: C,
    pub outputs: Vec<OutputRecord>,
}

#[derive(Debug, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Record an output file that has already been written.
pub fn record(path: &Path) -> Result<OutputRecord, CliError> {
    let bytes = std::fs::read(path)?;
    Ok(OutputRecord {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
        bytes: bytes.len() as u64,
    })
}

/// Write `<out>.manifest.json` next to the primary artifact.
pub fn write<C: Serialize>(
    command: &'static str,
    config: &C,
    outputs: Vec<OutputRecord>,
    primary: &Path,
) -> Result<PathBuf, CliError> {
    let manifest = Manifest {
        tool: ToolInfo { name: "rydlab", version: env!("CARGO_PKG_VERSION") },
        command,
        config,
        outputs,
    };
    let mut path = primary.to_path_buf();
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "run".into());
    path.set_file_name(format!("{stem}.manifest.json"));
    let text = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(&path, text)?;
    Ok(path)
}
