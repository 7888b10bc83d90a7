//! TOML scenario files, shipped presets and `key=value` overrides.
//!
//! Parsing is strict: unknown keys anywhere in the document are errors.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::ChannelOverride;
use crate::engine::{run_sweep, ResultTable, RunOptions, SweepSpec};
use crate::error::{Error, Result};
use crate::scenario::{
    validate, DesignStrategy, RadioParams, RisConfig, Scenario, Topology, ValidatedScenario,
};

pub const SCHEMA_VERSION: u32 = 1;

fn default_c_target() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub trials: usize,
    pub seed: u64,
    /// Target secrecy rate for outage, coverage and secure power, bits/s/Hz.
    #[serde(default = "default_c_target")]
    pub c_target: f64,
}

/// On-disk form of a [`Scenario`] plus its sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub name: String,
    pub topology: Topology,
    pub radio: RadioParams,
    pub ris: RisConfig,
    pub strategy: DesignStrategy,
    pub run: RunSection,
    pub sweep: SweepSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel_override: Option<ChannelOverride>,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_table(table)
    }

    pub fn from_table(table: toml::Table) -> Result<Self> {
        let file: ScenarioFile = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                file.schema_version
            )));
        }
        Ok(file)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn scenario(&self) -> Scenario {
        Scenario {
            topology: self.topology.clone(),
            radio: self.radio.clone(),
            ris: self.ris.clone(),
            strategy: self.strategy,
            trials: self.run.trials,
            seed: self.run.seed,
            channel_override: self.channel_override.clone(),
        }
    }

    pub fn validated(&self) -> Result<ValidatedScenario> {
        validate(self.scenario())
    }

    pub fn run_options(&self, workers: usize) -> RunOptions {
        RunOptions {
            c_target: self.run.c_target,
            workers,
            ..RunOptions::default()
        }
    }

    /// SHA-256 of the canonical serialization, lowercase hex.
    pub fn content_hash(&self) -> Result<String> {
        Ok(sha256_hex(self.to_toml()?.as_bytes()))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// A scenario file shipped inside the binary.
#[derive(Debug, Clone, Copy)]
pub struct Preset {
    pub name: &'static str,
    pub source: &'static str,
    /// SHA-256 of `source` as released.
    pub sha256: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "fig8a",
        source: include_str!("../presets/fig8a.toml"),
        sha256: "9df07937784321bbf49761a28292b9380be378169f4d4b73863ec9903b88abe6",
    },
    Preset {
        name: "fig8b",
        source: include_str!("../presets/fig8b.toml"),
        sha256: "70b5b3f0984eb4c4d618dab5b09cc74584a8c3d84865f916a3f2294808f4bb61",
    },
    Preset {
        name: "fig9a",
        source: include_str!("../presets/fig9a.toml"),
        sha256: "843b68b0956edcccc21db85557eb4ace76f35b2c9c95e65b647aa03f5ee098b8",
    },
    Preset {
        name: "fig9b",
        source: include_str!("../presets/fig9b.toml"),
        sha256: "7ab32970d580eb1e8c1bc5b0e9269f9b3bdaf34edd8ae5d826106d2b8939da81",
    },
    Preset {
        name: "fig10",
        source: include_str!("../presets/fig10.toml"),
        sha256: "a42ca3f5c8c97b54425ca9d6fecb4c7152be94dfb2355551e691644bc4410dfd",
    },
];

pub fn preset(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

impl Preset {
    pub fn file(&self) -> ScenarioFile {
        ScenarioFile::parse(self.source).expect("shipped presets parse")
    }
}

/// Reads a scenario document from disk or, failing that, a shipped preset
/// named `name`, `presets/name` or `name.toml`.
pub fn load_document(spec: &str) -> Result<toml::Table> {
    let path = Path::new(spec);
    let text = if path.is_file() {
        std::fs::read_to_string(path)?
    } else {
        let stem = spec
            .trim_start_matches("presets/")
            .trim_end_matches(".toml");
        match preset(stem) {
            Some(p) => p.source.to_string(),
            None => {
                return Err(Error::Io(std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    format!("no scenario file or preset named `{spec}`"),
                )))
            }
        }
    };
    toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))
}

/// Editable scenario document: parsed TOML before strict typing.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioDocument(toml::Table);

impl ScenarioDocument {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text)
            .map(ScenarioDocument)
            .map_err(|e| Error::Config(e.to_string()))
    }

    /// See [`load_document`].
    pub fn load(spec: &str) -> Result<Self> {
        load_document(spec).map(ScenarioDocument)
    }

    pub fn set(&mut self, key: &str, raw: &str) -> Result<()> {
        apply_override(&mut self.0, key, raw)
    }

    pub fn to_file(&self) -> Result<ScenarioFile> {
        ScenarioFile::from_table(self.0.clone())
    }
}

/// Validates and runs the file's sweep.
pub fn run_file(file: &ScenarioFile, workers: usize) -> Result<ResultTable> {
    let base = file.validated()?;
    run_sweep(
        &base,
        &file.sweep,
        &file.run_options(workers),
        file.content_hash()?,
    )
}

/// Splits `key=value`.
pub fn parse_assignment(s: &str) -> Result<(String, String)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{s}` is not key=value")))?;
    let k = k.trim();
    if k.is_empty() {
        return Err(Error::Config(format!("override `{s}` has an empty key")));
    }
    Ok((k.to_string(), v.trim().to_string()))
}

fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn set_everywhere(table: &mut toml::Table, key: &str, value: &toml::Value) -> usize {
    let mut hits = 0;
    for (k, v) in table.iter_mut() {
        if k == key {
            *v = match (&*v, value) {
                // a series list collapses to the single overridden value
                (toml::Value::Array(_), new) if !new.is_array() => {
                    toml::Value::Array(vec![new.clone()])
                }
                _ => value.clone(),
            };
            hits += 1;
        } else if let toml::Value::Table(inner) = v {
            hits += set_everywhere(inner, key, value);
        }
    }
    hits
}

/// Applies one override. Dotted keys address a single path; bare keys set
/// every field with that name.
pub fn apply_override(doc: &mut toml::Table, key: &str, raw: &str) -> Result<()> {
    let value = parse_value(raw);
    if key.contains('.') {
        let parts: Vec<&str> = key.split('.').collect();
        let (last, path) = parts.split_last().expect("non-empty");
        let mut cur = &mut *doc;
        for p in path {
            cur = match cur.get_mut(*p) {
                Some(toml::Value::Table(t)) => t,
                _ => return Err(Error::Config(format!("unknown key `{key}`"))),
            };
        }
        // a new leaf is allowed here; strict parsing rejects typos later
        cur.insert((*last).to_string(), value);
        Ok(())
    } else if set_everywhere(doc, key, &value) == 0 {
        Err(Error::Config(format!("unknown key `{key}`")))
    } else {
        Ok(())
    }
}
