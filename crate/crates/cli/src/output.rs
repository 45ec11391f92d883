//! Output directory bookkeeping and the run manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliResult;

#[derive(Debug, Clone, Serialize)]
pub struct OutputFile {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: BTreeMap<String, String>,
    pub derived: BTreeMap<String, Value>,
    /// Seconds since the Unix epoch; `SOURCE_DATE_EPOCH` wins when set.
    pub timestamp: u64,
    pub outputs: Vec<OutputFile>,
    pub notes: Vec<String>,
}

/// Non-finite numbers have no JSON form; they are written as strings ("inf", "-inf", "nan").
pub fn number(x: f64) -> Value {
    if x.is_finite() {
        serde_json::json!(x)
    } else if x.is_nan() {
        Value::String("nan".into())
    } else if x > 0.0 {
        Value::String("inf".into())
    } else {
        Value::String("-inf".into())
    }
}

pub struct Outputs {
    dir: PathBuf,
    files: Vec<OutputFile>,
    pub derived: BTreeMap<String, Value>,
    pub notes: Vec<String>,
}

impl Outputs {
    pub fn new(dir: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new(), derived: BTreeMap::new(), notes: Vec::new() })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<PathBuf> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes)?;
        let digest = Sha256::digest(bytes);
        self.files.push(OutputFile {
            path: name.to_string(),
            bytes: bytes.len(),
            sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
        });
        Ok(path)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<PathBuf> {
        let mut text = serde_json::to_vec_pretty(value)?;
        text.push(b'\n');
        self.write(name, &text)
    }

    /// CSV with a one-line header; floats use the shortest round-trip form.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<PathBuf> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        self.write(name, &bytes)
    }

    pub fn derive(&mut self, key: &str, value: f64) {
        self.derived.insert(key.to_string(), number(value));
    }

    /// Writes `<command>_manifest.json` listing every file written so far.
    pub fn finish(mut self, command: &str, config: &BTreeMap<String, String>) -> CliResult<PathBuf> {
        let manifest = RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            derived: std::mem::take(&mut self.derived),
            timestamp: timestamp(),
            outputs: self.files.clone(),
            notes: std::mem::take(&mut self.notes),
        };
        let path = self.dir.join(format!("{command}_manifest.json"));
        let mut text = serde_json::to_vec_pretty(&manifest)?;
        text.push(b'\n');
        std::fs::write(&path, text)?;
        Ok(path)
    }
}

fn timestamp() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or_else(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0))
}

pub fn fmt(x: f64) -> String {
    format!("{x:?}")
}
