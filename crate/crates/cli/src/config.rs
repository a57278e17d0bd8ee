//! Toolkit-wide configuration file.
//!
//! ```toml
//! [reward]
//! temporal_sigma_floor = 1.0
//! temporal_sigma_fraction = 0.1
//! spatial_gate = 1.0
//!
//! [motion]
//! stationary_speed_threshold = 0.05
//! slow_moderate_threshold = 0.5
//! moderate_fast_threshold = 1.5
//! scale_stable_log_threshold = 0.1823
//!
//! [densify]
//! stride = 0.5
//!
//! [server]
//! host = "127.0.0.1"
//! port = 8080
//! batch_cap = 256
//! ```
//!
//! Every key is optional. Values from the file are overridden by command-line
//! flags, which are in turn overridden per request by `config_overrides`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use stt_core::reward::MotionConfigOverrides;
use stt_core::{DensifyConfig, MotionConfig, RewardConfig};

pub const CONFIG_ENV: &str = "STT_CONFIG";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub host: String,
    pub port: u16,
    /// Largest accepted `/v1/score` batch.
    pub batch_cap: usize,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            host: "127.0.0.1".into(),
            port: 8080,
            batch_cap: 256,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RewardSection {
    temporal_sigma_floor: Option<f64>,
    temporal_sigma_fraction: Option<f64>,
    spatial_gate: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    reward: RewardSection,
    motion: MotionConfigOverrides,
    densify: Option<DensifyConfig>,
    server: ServerConfig,
}

/// Effective configuration of one invocation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Settings {
    pub reward: RewardConfig,
    pub densify: DensifyConfig,
    pub server: ServerConfig,
}

/// Values given on the command line. `None` keeps the file value.
#[derive(Debug, Clone, Default)]
pub struct FlagOverrides {
    pub stride: Option<f64>,
    pub sigma_floor: Option<f64>,
    pub sigma_fraction: Option<f64>,
    pub gate: Option<f64>,
    pub motion: MotionConfigOverrides,
    pub host: Option<String>,
    pub port: Option<u16>,
    pub batch_cap: Option<usize>,
}

impl Settings {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let file: FileConfig = toml::from_str(text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        let mut reward = RewardConfig::default();
        let r = &file.reward;
        reward.temporal_sigma_floor = r.temporal_sigma_floor.unwrap_or(reward.temporal_sigma_floor);
        reward.temporal_sigma_fraction = r.temporal_sigma_fraction.unwrap_or(reward.temporal_sigma_fraction);
        reward.spatial_gate = r.spatial_gate.unwrap_or(reward.spatial_gate);
        file.motion.apply(&mut reward.motion_config);
        Ok(Self {
            reward,
            densify: file.densify.unwrap_or_default(),
            server: file.server,
        })
    }

    /// Loads `explicit`, else the file named by `STT_CONFIG`, else defaults.
    pub fn load(explicit: Option<&Path>) -> Result<Self, ConfigError> {
        let from_env = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
        match explicit.map(Path::to_path_buf).or(from_env) {
            None => Ok(Self::default()),
            Some(path) => {
                let text = std::fs::read_to_string(&path).map_err(|source| ConfigError::Read {
                    path: path.clone(),
                    source,
                })?;
                Self::from_toml(&text, &path)
            }
        }
    }

    pub fn apply(&mut self, flags: &FlagOverrides) {
        if let Some(v) = flags.stride {
            self.densify.stride = v;
        }
        if let Some(v) = flags.sigma_floor {
            self.reward.temporal_sigma_floor = v;
        }
        if let Some(v) = flags.sigma_fraction {
            self.reward.temporal_sigma_fraction = v;
        }
        if let Some(v) = flags.gate {
            self.reward.spatial_gate = v;
        }
        flags.motion.apply(&mut self.reward.motion_config);
        if let Some(v) = &flags.host {
            self.server.host = v.clone();
        }
        if let Some(v) = flags.port {
            self.server.port = v;
        }
        if let Some(v) = flags.batch_cap {
            self.server.batch_cap = v;
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.reward.validate().map_err(ConfigError::Invalid)?;
        self.densify
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.server.batch_cap == 0 {
            return Err(ConfigError::Invalid("batch_cap must be at least 1".into()));
        }
        Ok(())
    }

    pub fn motion(&self) -> &MotionConfig {
        &self.reward.motion_config
    }
}

/// SHA-256 of the canonical JSON form of a reward configuration.
pub fn config_digest(cfg: &RewardConfig) -> String {
    let canonical = serde_json::to_vec(cfg).expect("config serializes");
    hex::encode(Sha256::digest(&canonical))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        let s = Settings::from_toml("", Path::new("x.toml")).unwrap();
        assert_eq!(s, Settings::default());
    }

    #[test]
    fn sections_and_precedence() {
        let text = "[reward]\nspatial_gate = 2.0\n[motion]\nslow_moderate_threshold = 0.6\n[densify]\nstride = 0.25\n[server]\nbatch_cap = 8\n";
        let mut s = Settings::from_toml(text, Path::new("x.toml")).unwrap();
        assert_eq!(s.reward.spatial_gate, 2.0);
        assert_eq!(s.reward.motion_config.slow_moderate_threshold, 0.6);
        assert_eq!(s.densify.stride, 0.25);
        assert_eq!(s.server.batch_cap, 8);
        assert_eq!(s.server.port, 8080);

        s.apply(&FlagOverrides {
            gate: Some(3.0),
            stride: Some(1.0),
            ..Default::default()
        });
        assert_eq!(s.reward.spatial_gate, 3.0);
        assert_eq!(s.densify.stride, 1.0);
        assert_eq!(s.reward.motion_config.slow_moderate_threshold, 0.6);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(Settings::from_toml("[reward]\nsigma = 1\n", Path::new("x.toml")).is_err());
        assert!(Settings::from_toml("[extra]\n", Path::new("x.toml")).is_err());
    }

    #[test]
    fn digest_tracks_config() {
        let a = RewardConfig::default();
        assert_eq!(config_digest(&a), config_digest(&a));
        assert_eq!(config_digest(&a).len(), 64);
        let b = RewardConfig { spatial_gate: 2.0, ..a };
        assert_ne!(config_digest(&a), config_digest(&b));
    }
}
