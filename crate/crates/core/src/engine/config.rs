//! Engine configuration: the TOML file consumed by `run` and `bench`.
//!
//! ```toml
//! # engine.toml
//! schema = "configs/traffic.ontology"  # omit to use the built-in schema
//! notifications = "out/notifications.jsonl"  # or "stdout"
//! enrichment = true
//! state_backend = false
//! track_iou = 0.3
//! parking_threshold = 0.5
//! max_gap = 2
//! axis = [1.0, 0.0]
//!
//! queries = [
//!   "QUERY q1 SUBSCRIBER s1 OBJECT Car WINDOW COUNT 5 FROM P1",
//! ]
//!
//! [[publishers]]
//! id = "P1"
//! source = "frames/p1.jsonl"           # or "synthetic:overtake:7:60"
//! ```
//!
//! A `synthetic:` source is `synthetic:<kind>:<seed>:<frames>`, generated
//! on the fly with that kind's default parameters.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spatial::Axis;

/// Failures of config loading.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// One publisher declaration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublisherConfig {
    pub id: String,
    /// A frame file path, or `synthetic:<kind>:<seed>:<frames>`.
    pub source: String,
}

/// The engine configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineConfig {
    /// Path to an ontology schema file; the built-in traffic schema when
    /// omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    /// Notification destination for the CLI: a path, or `stdout`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notifications: Option<String>,
    #[serde(default = "default_true")]
    pub enrichment: bool,
    /// Keep a log of state summaries for inspection and replay debugging.
    #[serde(default)]
    pub state_backend: bool,
    /// Retain full frame history per publisher (memory-hungry; off by
    /// default — windows hold the frames they need).
    #[serde(default)]
    pub retain_streams: bool,
    #[serde(default = "default_track_iou")]
    pub track_iou: f64,
    #[serde(default = "default_parking_threshold")]
    pub parking_threshold: f64,
    /// Dropout bridging for the overtake rule.
    #[serde(default = "default_max_gap")]
    pub max_gap: u32,
    /// Frame-of-reference front axis as [x, y].
    #[serde(default = "default_axis")]
    pub axis: [f64; 2],
    #[serde(default)]
    pub queries: Vec<String>,
    #[serde(default)]
    pub publishers: Vec<PublisherConfig>,
}

fn default_true() -> bool {
    true
}
fn default_track_iou() -> f64 {
    0.3
}
fn default_parking_threshold() -> f64 {
    0.5
}
fn default_max_gap() -> u32 {
    2
}
fn default_axis() -> [f64; 2] {
    [1.0, 0.0]
}

impl Default for EngineConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty config is valid")
    }
}

/// The tunables the engine consumes, extracted from a config.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineSettings {
    pub enrichment: bool,
    pub state_backend: bool,
    pub retain_streams: bool,
    pub track_iou: f64,
    pub parking_threshold: f64,
    pub max_gap: u32,
    pub axis: Axis,
}

impl Default for EngineSettings {
    fn default() -> Self {
        EngineConfig::default()
            .settings()
            .expect("default config settings are valid")
    }
}

impl EngineConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: EngineConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self, ConfigError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if !(self.track_iou > 0.0 && self.track_iou < 1.0) {
            return Err(ConfigError::Invalid(format!(
                "track_iou {} outside (0, 1)",
                self.track_iou
            )));
        }
        if !(self.parking_threshold > 0.0 && self.parking_threshold <= 1.0) {
            return Err(ConfigError::Invalid(format!(
                "parking_threshold {} outside (0, 1]",
                self.parking_threshold
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        for p in &self.publishers {
            if !seen.insert(&p.id) {
                return Err(ConfigError::Invalid(format!(
                    "duplicate publisher id '{}'",
                    p.id
                )));
            }
        }
        Ok(())
    }

    pub fn settings(&self) -> Result<EngineSettings, ConfigError> {
        let axis = Axis::new(self.axis[0], self.axis[1])
            .map_err(|_| ConfigError::Invalid("axis must be a non-zero vector".to_string()))?;
        Ok(EngineSettings {
            enrichment: self.enrichment,
            state_backend: self.state_backend,
            retain_streams: self.retain_streams,
            track_iou: self.track_iou,
            parking_threshold: self.parking_threshold,
            max_gap: self.max_gap,
            axis,
        })
    }
}
