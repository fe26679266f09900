//! Service and CLI configuration: an optional TOML file plus environment
//! overrides.
//!
//! ```toml
//! port = 8080
//! bind = "127.0.0.1"
//! data_dir = "./ctxbench-data"
//! fixture_mode = true
//! ```
//!
//! Overrides: `CTXBENCH_PORT`, `CTXBENCH_DATA_DIR`, `CTXBENCH_FIXTURE_MODE`
//! (`1`/`true`/`0`/`false`), `CTXBENCH_FETCHER` (`fixture`/`live`, applied
//! after the former). `CTXBENCH_CONFIG` names the file when no path is
//! given explicitly.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub const CONFIG_ENV: &str = "CTXBENCH_CONFIG";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("parsing {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("environment variable {name}={value:?} is invalid")]
    BadEnv { name: &'static str, value: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub port: u16,
    pub bind: String,
    pub data_dir: PathBuf,
    /// Sequence lookups use local fixtures only.
    pub fixture_mode: bool,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            port: 8080,
            bind: "127.0.0.1".into(),
            data_dir: PathBuf::from("ctxbench-data"),
            fixture_mode: true,
        }
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Some(true),
        "0" | "false" | "no" | "off" => Some(false),
        _ => None,
    }
}

impl Config {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Applies overrides from `var` (normally `std::env::var`).
    pub fn apply_env(&mut self, var: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        if let Some(v) = var("CTXBENCH_PORT") {
            self.port = v.trim().parse().map_err(|_| ConfigError::BadEnv {
                name: "CTXBENCH_PORT",
                value: v.clone(),
            })?;
        }
        if let Some(v) = var("CTXBENCH_DATA_DIR") {
            self.data_dir = PathBuf::from(v);
        }
        if let Some(v) = var("CTXBENCH_FIXTURE_MODE") {
            self.fixture_mode = parse_bool(&v).ok_or(ConfigError::BadEnv {
                name: "CTXBENCH_FIXTURE_MODE",
                value: v.clone(),
            })?;
        }
        if let Some(v) = var(crate::registry::fetch::FETCHER_ENV) {
            self.fixture_mode = match v.trim() {
                "fixture" => true,
                "live" => false,
                _ => {
                    return Err(ConfigError::BadEnv {
                        name: crate::registry::fetch::FETCHER_ENV,
                        value: v.clone(),
                    })
                }
            };
        }
        Ok(())
    }

    pub fn fetch_mode(&self) -> crate::registry::FetchMode {
        if self.fixture_mode {
            crate::registry::FetchMode::Fixture
        } else {
            crate::registry::FetchMode::Live
        }
    }

    /// File (explicit path, else `CTXBENCH_CONFIG`, else defaults) followed by
    /// environment overrides.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let env_path = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
        let mut cfg = match path.or(env_path.as_deref()) {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        cfg.apply_env(|k| std::env::var(k).ok())?;
        Ok(cfg)
    }
}
