use std::path::{Path, PathBuf};

use cellprobe::inject::ScoringConstants;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid value for {var}: {value:?}")]
    Env { var: String, value: String },
}

/// Defaults for newly issued annotation tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TaskDefaults {
    pub probe_fraction: f64,
    pub tv_budget: f64,
    pub real_items: usize,
}

impl Default for TaskDefaults {
    fn default() -> Self {
        Self {
            probe_fraction: 0.5,
            tv_budget: 0.1,
            real_items: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ServerConfig {
    pub listen: String,
    /// Event log and snapshot location.
    pub data_dir: PathBuf,
    /// Image catalog (`manifest.json` plus PPM files).
    pub catalog_dir: PathBuf,
    /// Write a snapshot after this many events; 0 disables snapshots.
    pub snapshot_every: u64,
    pub scoring: ScoringConstants,
    pub tasks: TaskDefaults,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            listen: "127.0.0.1:8080".into(),
            data_dir: PathBuf::from("data"),
            catalog_dir: PathBuf::from("catalog"),
            snapshot_every: 100,
            scoring: ScoringConstants::default(),
            tasks: TaskDefaults::default(),
        }
    }
}

impl ServerConfig {
    /// Read `path` (TOML) if given, then apply `CELLPROBE_*` environment
    /// overrides.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut config = match path {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
                    path: path.to_path_buf(),
                    source,
                })?;
                Self::from_toml(&text).map_err(|message| ConfigError::Parse {
                    path: path.to_path_buf(),
                    message,
                })?
            }
            None => Self::default(),
        };
        config.apply_env(|k| std::env::var(k).ok())?;
        Ok(config)
    }

    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        fn parse<T: std::str::FromStr>(var: &str, value: &str) -> Result<T, ConfigError> {
            value.parse().map_err(|_| ConfigError::Env {
                var: var.into(),
                value: value.into(),
            })
        }
        for var in [
            "CELLPROBE_LISTEN",
            "CELLPROBE_DATA_DIR",
            "CELLPROBE_CATALOG_DIR",
            "CELLPROBE_SNAPSHOT_EVERY",
            "CELLPROBE_BASE_POINTS",
            "CELLPROBE_STREAK_STEP",
            "CELLPROBE_STREAK_CAP",
        ] {
            let Some(v) = lookup(var) else { continue };
            match var {
                "CELLPROBE_LISTEN" => self.listen = v,
                "CELLPROBE_DATA_DIR" => self.data_dir = v.into(),
                "CELLPROBE_CATALOG_DIR" => self.catalog_dir = v.into(),
                "CELLPROBE_SNAPSHOT_EVERY" => self.snapshot_every = parse(var, &v)?,
                "CELLPROBE_BASE_POINTS" => self.scoring.base_points = parse(var, &v)?,
                "CELLPROBE_STREAK_STEP" => self.scoring.streak_step = parse(var, &v)?,
                _ => self.scoring.streak_cap = parse(var, &v)?,
            }
        }
        Ok(())
    }
}
