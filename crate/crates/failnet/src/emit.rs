//! Result emission with a reproducibility header.
//!
//! JSON documents are `{"header": ..., "result": ...}`. CSV files start with
//! `# key value` comment lines carrying the same header fields.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const TOOL: &str = "failnet";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Everything that determines a command's output. Output paths are excluded.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub seed: u64,
    /// Input role to SHA-256 of the file contents.
    pub inputs: BTreeMap<String, String>,
    pub options: BTreeMap<String, Value>,
}

impl RunConfig {
    pub fn new(command: &str, seed: u64) -> Self {
        Self { command: command.into(), seed, inputs: BTreeMap::new(), options: BTreeMap::new() }
    }

    pub fn input(mut self, role: &str, bytes: &[u8]) -> Self {
        self.inputs.insert(role.into(), sha256_hex(bytes));
        self
    }

    pub fn option(mut self, key: &str, value: impl Serialize) -> Self {
        let v = serde_json::to_value(value).expect("option serializes");
        self.options.insert(key.into(), v);
        self
    }

    pub fn hash(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("config serializes"))
    }

    pub fn header(&self) -> Header {
        Header {
            tool: TOOL.into(),
            version: VERSION.into(),
            command: self.command.clone(),
            seed: self.seed,
            config_hash: self.hash(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct Header {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config_hash: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    header: &'a Header,
    result: &'a T,
}

pub fn json_bytes<T: Serialize>(header: &Header, result: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(&Document { header, result })
        .map_err(|e| CliError::Usage(format!("result does not serialize: {e}")))?;
    out.push(b'\n');
    Ok(out)
}

pub fn csv_bytes(header: &Header, columns: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for (k, v) in [
        ("tool", header.tool.as_str()),
        ("version", &header.version),
        ("command", &header.command),
        ("seed", &header.seed.to_string()),
        ("config_hash", &header.config_hash),
    ] {
        writeln!(out, "# {k} {v}").expect("write to vec");
    }
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| CliError::Usage(format!("csv: {e}"));
    w.write_record(columns).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| CliError::Usage(format!("csv: {e}")))
}

/// Writes to `out`, or to stdout when `None`.
pub fn write_out(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => fs::write(p, bytes).map_err(|e| CliError::io(p, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes).and_then(|_| stdout.flush()).map_err(|e| CliError::io(PathBuf::from("<stdout>"), e))
        }
    }
}

/// Shortest round-trip decimal form, used for CSV cells.
pub fn num(x: f64) -> String {
    format!("{x}")
}
