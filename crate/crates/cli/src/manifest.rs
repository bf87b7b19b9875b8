//! Run manifests: the exact arguments of a run plus digests of everything it
//! read and wrote, so the run can be replayed and checked.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::CliError;

pub fn display<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Working directory the arguments are relative to.
    pub cwd: PathBuf,
    /// Arguments after the program name.
    pub argv: Vec<String>,
    pub params: serde_json::Value,
    /// SHA-256 of every input file.
    pub inputs: BTreeMap<String, String>,
    /// SHA-256 of every output file. CSV digests skip the trailing
    /// wall-time column, the only field that legitimately varies.
    pub outputs: BTreeMap<String, String>,
    /// Command-specific intermediate values.
    pub notes: BTreeMap<String, serde_json::Value>,
    pub wall_time_s: f64,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{:02x}", b)).collect()
}

fn strip_last_column(text: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(text.len());
    for line in text.split_inclusive(|&b| b == b'\n') {
        match line.iter().rposition(|&b| b == b',') {
            Some(i) => out.extend_from_slice(&line[..i]),
            None => out.extend_from_slice(line),
        }
        out.push(b'\n');
    }
    out
}

pub fn digest(path: &Path, bytes: &[u8]) -> String {
    if path.extension().is_some_and(|e| e == "csv") {
        hex(&Sha256::digest(strip_last_column(bytes)))
    } else {
        hex(&Sha256::digest(bytes))
    }
}

pub fn digest_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(digest(path, &bytes))
}

pub fn read(path: &Path) -> Result<Manifest, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Invalid(format!("{}: bad manifest: {}", path.display(), e)))
}

pub fn to_json(m: &Manifest) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(m).expect("manifest serializes");
    bytes.push(b'\n');
    bytes
}
