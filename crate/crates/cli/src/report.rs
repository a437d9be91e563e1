//! JSONL and CSV sinks. Each JSONL file starts with a header line holding the
//! experiment name, the effective parameters and the manifest; every later
//! line is one data record.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Clone, Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub params: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub threads: usize,
    pub timestamp: String,
    pub inputs: Vec<InputDigest>,
}

pub fn digest_file(path: &Path) -> Result<InputDigest, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let sum = Sha256::digest(&bytes);
    Ok(InputDigest {
        path: path.display().to_string(),
        sha256: sum.iter().map(|b| format!("{b:02x}")).collect(),
    })
}

pub struct Sink {
    jsonl: Option<(PathBuf, BufWriter<File>)>,
    csv: Option<(PathBuf, csv::Writer<File>)>,
    csv_header: bool,
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::usage(format!("cannot write {}: {e}", path.display()))
}

impl Sink {
    pub fn open(out: Option<&Path>, csv_path: Option<&Path>) -> Result<Self, CliError> {
        let jsonl = match out {
            Some(p) => Some((p.to_path_buf(), BufWriter::new(File::create(p).map_err(|e| io_error(p, e))?))),
            None => None,
        };
        let csv = match csv_path {
            Some(p) => Some((p.to_path_buf(), csv::Writer::from_path(p).map_err(|e| io_error(p, e))?)),
            None => None,
        };
        Ok(Self { jsonl, csv, csv_header: false })
    }

    pub fn header(&mut self, manifest: &Manifest) -> Result<(), CliError> {
        let line = json!({
            "experiment": manifest.command,
            "params": manifest.params,
            "manifest": manifest,
        });
        self.line(&line)
    }

    /// One data record, tagged with its kind.
    pub fn record<T: Serialize>(&mut self, kind: &str, value: &T) -> Result<(), CliError> {
        if self.jsonl.is_none() {
            return Ok(());
        }
        let mut v = serde_json::to_value(value).map_err(|e| CliError::numerical(format!("serialization: {e}")))?;
        if let Value::Object(map) = &mut v {
            map.insert("record".into(), Value::String(kind.into()));
        }
        self.line(&v)
    }

    fn line(&mut self, v: &Value) -> Result<(), CliError> {
        if let Some((path, w)) = &mut self.jsonl {
            serde_json::to_writer(&mut *w, v).map_err(|e| io_error(path, e))?;
            w.write_all(b"\n").map_err(|e| io_error(path, e))?;
        }
        Ok(())
    }

    /// Plot row; the first call fixes the column names.
    pub fn row(&mut self, columns: &[&str], values: &[String]) -> Result<(), CliError> {
        if let Some((path, w)) = &mut self.csv {
            if !self.csv_header {
                w.write_record(columns).map_err(|e| io_error(path, e))?;
                self.csv_header = true;
            }
            w.write_record(values).map_err(|e| io_error(path, e))?;
        }
        Ok(())
    }

    pub fn finish(self) -> Result<(), CliError> {
        if let Some((path, mut w)) = self.jsonl {
            w.flush().map_err(|e| io_error(&path, e))?;
        }
        if let Some((path, mut w)) = self.csv {
            w.flush().map_err(|e| io_error(&path, e))?;
        }
        Ok(())
    }
}
