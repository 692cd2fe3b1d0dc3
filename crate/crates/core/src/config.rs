//! Run configuration: one TOML file with dotted-key overrides.
//!
//! ```toml
//! [data]
//! train = "data/train.jsonl"
//! dev = "data/dev.jsonl"
//! schema = "data/schema.json"
//!
//! [model.encoder]
//! d_ctx = 768
//!
//! [train]
//! epochs = 40
//!
//! [output]
//! dir = "runs/default"
//! ```
//!
//! Every section and key is optional; missing values take their defaults.
//! Unknown keys are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inferencer::InferenceOptions;
use crate::model::ModelConfig;
use crate::synth::SynthConfig;
use crate::trainer::TrainConfig;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub test: Option<PathBuf>,
    /// Label schema file (JSON with `event_types` and `role_types`).
    pub schema: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InferenceConfig {
    /// Decoder steps at prediction time; defaults to the training `max_tuples`.
    pub max_steps: Option<usize>,
    pub max_trigger_len: Option<usize>,
    pub max_argument_len: Option<usize>,
}

impl InferenceConfig {
    pub fn options(&self) -> InferenceOptions {
        InferenceOptions {
            max_trigger_len: self.max_trigger_len,
            max_argument_len: self.max_argument_len,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("runs/default"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub inference: InferenceConfig,
    pub output: OutputConfig,
    pub synth: SynthConfig,
}

impl RunConfig {
    /// Parses TOML text, applies `key=value` overrides and validates.
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        for item in overrides {
            apply_override(&mut table, item)?;
        }
        let config: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(format!("config: {}", e.message())))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file (or the defaults when `path` is `None`).
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::from_toml(&text, overrides)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.train.validate()?;
        self.synth.validate()?;
        if self.inference.max_steps == Some(0) {
            return Err(Error::Config("inference.max_steps must be positive".into()));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }
}

/// Sets `a.b.c = value` in a TOML table. The value is parsed as a TOML value
/// when possible and taken as a plain string otherwise.
pub fn apply_override(table: &mut toml::Table, item: &str) -> Result<()> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {item:?} is not key=value")))?;
    let key = key.trim();
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("override key {key:?} is malformed")));
    }
    let value = parse_value(raw.trim());
    let mut node = table;
    for part in &parts[..parts.len() - 1] {
        let entry = node
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override key {key:?}: {part} is not a section")))?;
    }
    node.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&wrapped) {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_mirror_reference_hyperparameters() {
        let c = RunConfig::from_toml("", &[]).unwrap();
        assert_eq!(c.train.epochs, 40);
        assert_eq!(c.train.batch_size, 32);
        assert_eq!(c.train.learning_rate, 1e-3);
        assert_eq!(c.train.weight_decay, 1e-5);
        assert_eq!(c.train.dropout, 0.5);
        assert_eq!(c.model.encoder.width(), 968);
        assert_eq!(c.model.decoder.d_p, 968);
    }

    #[test]
    fn overrides_are_typed() {
        let c = RunConfig::from_toml(
            "[train]\nepochs = 3\n",
            &[
                "train.epochs=5".into(),
                "model.encoder.use_ent=false".into(),
                "data.train=corpus/train.jsonl".into(),
            ],
        )
        .unwrap();
        assert_eq!(c.train.epochs, 5);
        assert!(!c.model.encoder.use_ent);
        assert_eq!(c.data.train.as_deref(), Some(Path::new("corpus/train.jsonl")));
    }

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::from_toml("[train]\nepoch = 3\n", &[]).unwrap_err().to_string();
        assert!(err.contains("epoch"), "{err}");
        let err = RunConfig::from_toml("", &["train.lr=0.1".into()]).unwrap_err().to_string();
        assert!(err.contains("lr"), "{err}");
    }

    #[test]
    fn echo_round_trips() {
        let c = RunConfig::from_toml("", &["model.decoder.d_p=12".into()]).unwrap();
        assert_eq!(RunConfig::from_toml(&c.to_toml(), &[]).unwrap(), c);
    }
}
