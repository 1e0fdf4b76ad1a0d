//! Input tracking, staged atomic outputs and the run manifest.

use std::collections::BTreeMap;
use std::io::{Cursor, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};
use transart::datamodel::{parse_dataset, parse_predictions, Dataset, LabelOrder, PredictionRecord, Task};
use transart::{Error, Result};

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub version: String,
    pub subcommand: String,
    pub config: serde_json::Value,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub duration_seconds: f64,
}

pub fn manifest_path(primary: &Path) -> PathBuf {
    let mut name = primary.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// One subcommand invocation. Outputs are held in memory and only written,
/// each through a temporary file and a rename, once the command succeeded.
pub struct Run {
    subcommand: String,
    config: serde_json::Value,
    started: Instant,
    inputs: BTreeMap<String, String>,
    outputs: Vec<(PathBuf, Vec<u8>)>,
    /// Files the command updates in place, hashed after it finishes.
    side_outputs: Vec<PathBuf>,
}

impl Run {
    pub fn new(subcommand: &str, config: serde_json::Value) -> Self {
        Run {
            subcommand: subcommand.to_owned(),
            config,
            started: Instant::now(),
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            side_outputs: Vec::new(),
        }
    }

    pub fn read(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        self.inputs.insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(bytes)
    }

    pub fn read_text(&mut self, path: &Path) -> Result<String> {
        let bytes = self.read(path)?;
        String::from_utf8(bytes).map_err(|e| Error::Parse {
            line: 0,
            message: format!("{}: not valid UTF-8: {e}", path.display()),
        })
    }

    pub fn dataset(&mut self, path: &Path, task: Task) -> Result<Dataset> {
        let bytes = self.read(path)?;
        parse_dataset(Cursor::new(bytes), task).map_err(|e| in_file(path, e))
    }

    pub fn predictions(&mut self, path: &Path, labels: &LabelOrder) -> Result<Vec<PredictionRecord>> {
        let bytes = self.read(path)?;
        parse_predictions(Cursor::new(bytes), labels).map_err(|e| in_file(path, e))
    }

    pub fn write(&mut self, path: &Path, bytes: Vec<u8>) {
        self.outputs.push((path.to_owned(), bytes));
    }

    pub fn write_json<T: Serialize>(&mut self, path: &Path, value: &T) {
        let mut bytes = serde_json::to_vec_pretty(value).expect("report serializes");
        bytes.push(b'\n');
        self.write(path, bytes);
    }

    pub fn side_output(&mut self, path: &Path) {
        self.side_outputs.push(path.to_owned());
    }

    /// Writes every staged output, then the manifest beside `primary`.
    pub fn commit(self, primary: Option<&Path>) -> Result<()> {
        let mut digests = BTreeMap::new();
        for (path, bytes) in &self.outputs {
            write_atomic(path, bytes)?;
            digests.insert(path.display().to_string(), sha256_hex(bytes));
        }
        for path in &self.side_outputs {
            let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
            digests.insert(path.display().to_string(), sha256_hex(&bytes));
        }
        if let Some(primary) = primary {
            let manifest = RunManifest {
                version: env!("CARGO_PKG_VERSION").to_owned(),
                subcommand: self.subcommand,
                config: self.config,
                inputs: self.inputs,
                outputs: digests,
                duration_seconds: self.started.elapsed().as_secs_f64(),
            };
            let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
            bytes.push(b'\n');
            write_atomic(&manifest_path(primary), &bytes)?;
        }
        Ok(())
    }
}

fn in_file(path: &Path, e: Error) -> Error {
    match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(bytes)
        .and_then(|_| tmp.as_file().sync_all())
        .map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
