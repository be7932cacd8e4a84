//! Scenario files.
//!
//! A scenario is a small TOML file:
//!
//! ```toml
//! experiment = "trajectory"
//! seed = 7
//! output = "out/trajectory"     # optional; --out wins
//!
//! [profile]                     # optional; name + numeric parameters
//! name = "sinusoid"
//! mean = 1.0
//! amplitude = 0.5
//! wavenumber = 1.0
//!
//! [numerics]                    # optional; unset keys take experiment defaults
//! n_steps = 500
//! n_traj = 20
//! ```
//!
//! Unknown keys are rejected, and so are `numerics` keys the chosen
//! experiment does not read.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub experiment: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileConfig>,
    #[serde(default)]
    pub numerics: Numerics,
}

fn default_seed() -> u64 {
    1
}

/// A profile name plus its numeric parameters; the experiment decides which
/// names and keys are valid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileConfig {
    pub name: String,
    #[serde(flatten)]
    pub params: BTreeMap<String, f64>,
}

impl ProfileConfig {
    pub fn pairs(&self) -> Vec<(&str, f64)> {
        self.params.iter().map(|(k, &v)| (k.as_str(), v)).collect()
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.params.get(key).copied()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pi0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_steps: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_traj: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cells: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub record_every: Option<f64>,
}

impl Numerics {
    /// Names of the keys that were given.
    pub fn set_keys(&self) -> Vec<&'static str> {
        let mut keys = Vec::new();
        let mut add = |set: bool, k| {
            if set {
                keys.push(k)
            }
        };
        add(self.x0.is_some(), "x0");
        add(self.pi0.is_some(), "pi0");
        add(self.alpha.is_some(), "alpha");
        add(self.delta_scale.is_some(), "delta_scale");
        add(self.n_steps.is_some(), "n_steps");
        add(self.n_traj.is_some(), "n_traj");
        add(self.cells.is_some(), "cells");
        add(self.t_end.is_some(), "t_end");
        add(self.record_every.is_some(), "record_every");
        keys
    }
}

impl ScenarioConfig {
    /// Parses TOML text, applying `section.key=value` overrides first.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        let mut doc: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let value = toml::Value::Table(doc);
        serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            if path == "." {
                CliError::Config(e.inner().to_string())
            } else {
                CliError::Config(format!("`{path}`: {}", e.inner()))
            }
        })
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, overrides)
    }

    /// SHA-256 of the canonical JSON form, excluding the output location.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(&self.without_output()).expect("config serializes");
        Sha256::digest(&canonical).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn without_output(&self) -> Self {
        ScenarioConfig {
            output: None,
            ..self.clone()
        }
    }
}

/// `key=value` or `section.key=value`; the value is read as a TOML value, or
/// as a bare string if that fails.
fn apply_override(doc: &mut toml::Table, spec: &str) -> Result<(), CliError> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{spec}` is not of the form key=value")))?;
    let (path, raw) = (path.trim(), raw.trim());
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) || parts.len() > 2 {
        return Err(CliError::Config(format!("override key `{path}` must be `key` or `section.key`")));
    }
    let table = match parts.as_slice() {
        [_] => doc,
        [section, _] => doc
            .entry(section.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("`{section}` is not a section")))?,
        _ => unreachable!(),
    };
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}
