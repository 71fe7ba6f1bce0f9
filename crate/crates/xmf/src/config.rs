//! Run configuration: defaults, an optional TOML file, and the resolved
//! record written next to every run's outputs.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use xmf_core::capscore::{DEFAULT_ALPHA_AC, DEFAULT_GAMMA_IC, DEFAULT_MAX_ATTEMPTS, DEFAULT_THRESHOLD};
use xmf_core::diffusion::{ScheduleConfig, DEFAULT_GAMMA_SNR};
use xmf_core::simkernel::DEFAULT_BLOCK;
use xmf_core::PairingMode;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Settings a TOML config file may provide. Keys match the long flag names
/// with dashes replaced by underscores.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub mode: Option<String>,
    pub block_size: Option<usize>,
    pub threads: Option<usize>,
    pub threshold: Option<f64>,
    pub gamma_ic: Option<f64>,
    pub alpha_ac: Option<f64>,
    pub max_attempts: Option<u32>,
    pub gamma_snr: Option<f64>,
    pub timesteps: Option<usize>,
    pub beta_start: Option<f64>,
    pub beta_end: Option<f64>,
    pub seed: Option<u64>,
    pub out_dir: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config {path}: {message}")]
    Parse { path: String, message: String },
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

/// Everything that determines a run's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub subcommand: String,
    pub inputs: Vec<String>,
    pub mode: String,
    pub block_size: usize,
    /// `None` means one per logical core.
    pub threads: Option<usize>,
    pub threshold: f64,
    pub gamma_ic: f64,
    pub alpha_ac: f64,
    pub max_attempts: u32,
    pub gamma_snr: f64,
    pub timesteps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    pub seed: u64,
    pub oracle: bool,
    pub out_dir: String,
}

impl RunConfig {
    pub fn defaults(subcommand: &str) -> Self {
        let sched = ScheduleConfig::default();
        Self {
            subcommand: subcommand.into(),
            inputs: Vec::new(),
            mode: PairingMode::default().as_str().into(),
            block_size: DEFAULT_BLOCK,
            threads: None,
            threshold: DEFAULT_THRESHOLD,
            gamma_ic: DEFAULT_GAMMA_IC,
            alpha_ac: DEFAULT_ALPHA_AC,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            gamma_snr: DEFAULT_GAMMA_SNR,
            timesteps: sched.timesteps,
            beta_start: sched.beta_start,
            beta_end: sched.beta_end,
            seed: 0,
            oracle: false,
            out_dir: ".".into(),
        }
    }

    /// Layers file settings over the current values.
    pub fn apply_file(&mut self, f: &FileConfig) {
        macro_rules! take {
            ($($field:ident),*) => {$(
                if let Some(v) = f.$field.clone() {
                    self.$field = v;
                }
            )*};
        }
        take!(
            mode,
            block_size,
            threshold,
            gamma_ic,
            alpha_ac,
            max_attempts,
            gamma_snr,
            timesteps,
            beta_start,
            beta_end,
            seed,
            out_dir
        );
        if f.threads.is_some() {
            self.threads = f.threads;
        }
    }

    pub fn schedule(&self) -> ScheduleConfig {
        ScheduleConfig {
            timesteps: self.timesteps,
            beta_start: self.beta_start,
            beta_end: self.beta_end,
            gamma_snr: self.gamma_snr,
        }
    }

    /// SHA-256 over the settings that affect output content. Thread count
    /// and output directory are left out: neither changes any result.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.threads = None;
        canonical.out_dir.clear();
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }

    /// First line of every output file.
    pub fn header_line(&self) -> String {
        format!("# xmf {VERSION} config={}", &self.hash()[..16])
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }
}
