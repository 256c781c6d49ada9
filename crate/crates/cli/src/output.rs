//! Serialization of outputs and run manifests.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::jobs::Job;
use crate::settings::Settings;

pub const MANIFEST_FILE: &str = "manifest.json";

pub struct OutputFile {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl OutputFile {
    pub fn new(name: String, bytes: Vec<u8>) -> Self {
        Self { name, bytes }
    }
}

fn format_number(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        // shortest round-trip form; integral values print without a fraction
        format!("{x}")
    }
}

pub fn csv_bytes(columns: &[String], rows: &[Vec<f64>]) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    w.write_record(columns)?;
    for row in rows {
        w.write_record(row.iter().map(|&x| format_number(x)))?;
    }
    w.into_inner().context("flushing CSV buffer")
}

pub fn json_bytes(value: &Value) -> anyhow::Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u64,
    pub tool_version: String,
    pub job: Job,
    pub settings: Settings,
    /// File name to SHA-256 digest.
    pub outputs: BTreeMap<String, String>,
    pub wall_clock_seconds: f64,
    pub workers: usize,
}

impl RunManifest {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))
    }
}

/// Writes every output file into `dir` and returns their digests.
pub fn write_outputs(dir: &Path, files: &[OutputFile]) -> anyhow::Result<BTreeMap<String, String>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut digests = BTreeMap::new();
    for f in files {
        let path = dir.join(&f.name);
        fs::write(&path, &f.bytes).with_context(|| format!("writing {}", path.display()))?;
        digests.insert(f.name.clone(), sha256_hex(&f.bytes));
    }
    Ok(digests)
}

pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> anyhow::Result<()> {
    let bytes = json_bytes(&serde_json::to_value(manifest)?)?;
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))
}
