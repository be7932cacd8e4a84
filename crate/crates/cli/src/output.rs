//! Run artifacts: CSV files and `summary.json`, written atomically.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::config::ScenarioConfig;
use crate::CliError;

/// Writes `bytes` to `dir/name` through a temporary file in `dir` and a rename.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
    let target = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_error(dir, e))?;
    tmp.write_all(bytes).map_err(|e| io_error(&target, e))?;
    #[cfg(unix)]
    {
        // temporary files are created owner-only
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file()
            .set_permissions(std::fs::Permissions::from_mode(0o644))
            .map_err(|e| io_error(&target, e))?;
    }
    tmp.as_file().sync_all().map_err(|e| io_error(&target, e))?;
    tmp.persist(&target).map_err(|e| io_error(&target, e.error))?;
    Ok(target)
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// CSV text with a fixed header; floats use 17 significant digits.
pub struct Csv {
    text: String,
    columns: usize,
}

pub enum Cell<'a> {
    F(f64),
    I(i64),
    U(u64),
    S(&'a str),
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv {
            text: header.join(",") + "\n",
            columns: header.len(),
        }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        debug_assert_eq!(cells.len(), self.columns);
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            let _ = match c {
                Cell::F(v) => write!(self.text, "{v:.16e}"),
                Cell::I(v) => write!(self.text, "{v}"),
                Cell::U(v) => write!(self.text, "{v}"),
                Cell::S(v) => write!(self.text, "{v}"),
            };
        }
        self.text.push('\n');
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.text.into_bytes()
    }
}

/// A built-in check: `value` compared against a target description.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub target: String,
    pub pass: bool,
}

impl Check {
    pub fn new(name: &str, value: f64, target: impl Into<String>, pass: bool) -> Self {
        Check {
            name: name.into(),
            value,
            target: target.into(),
            pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub tool: &'static str,
    pub version: &'static str,
    pub core_version: &'static str,
    pub experiment: String,
    pub seed: u64,
    pub config_hash: String,
    pub config: ScenarioConfig,
    /// Parameters after defaults were filled in.
    pub parameters: BTreeMap<String, Value>,
    pub results: BTreeMap<String, Value>,
    pub audits: BTreeMap<String, Value>,
    pub checks: Vec<Check>,
    pub outputs: Vec<String>,
    pub passed: bool,
}

impl Summary {
    pub fn to_json(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("summary serializes");
        bytes.push(b'\n');
        bytes
    }
}
