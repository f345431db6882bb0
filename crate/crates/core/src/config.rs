//! TOML configuration shared by all CLI subcommands.
//!
//! Resolution order: `--config` flag, then the `RAPTOR_THRESHOLD_CONFIG`
//! environment variable, then built-in defaults. Individual CLI flags
//! override whatever the config resolved to.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::commitment::{self, receipt};
use crate::fountain::{DEFAULT_C, DEFAULT_DELTA};
use crate::overhead::Overhead;
use crate::threshold::{PlanOptions, DEFAULT_OVERHEAD_HI, DEFAULT_OVERHEAD_LO};

pub const CONFIG_ENV: &str = "RAPTOR_THRESHOLD_CONFIG";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Every tunable the CLI exposes. Overheads accept TOML strings ("1.1")
/// or floats (1.1); strings are the safe spelling for many digits.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub overhead_hi: Overhead,
    pub overhead_lo: Overhead,
    pub c: f64,
    pub delta: f64,
    pub prime_bits: u32,
    pub receipt_bits: u32,
    pub symbol_size: u32,
    pub seed: Option<u64>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            overhead_hi: Overhead::from_decimal_str(DEFAULT_OVERHEAD_HI)
                .expect("default overhead parses"),
            overhead_lo: Overhead::from_decimal_str(DEFAULT_OVERHEAD_LO)
                .expect("default overhead parses"),
            c: DEFAULT_C,
            delta: DEFAULT_DELTA,
            prime_bits: commitment::DEFAULT_PRIME_BITS,
            receipt_bits: receipt::DEFAULT_MODULUS_BITS,
            symbol_size: 1,
            seed: None,
        }
    }
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let config: Config =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Resolves the config for a run; `flag` is the `--config` value.
    pub fn load(flag: Option<&Path>) -> Result<Self, ConfigError> {
        Self::load_from(flag, std::env::var_os(CONFIG_ENV).map(PathBuf::from))
    }

    fn load_from(flag: Option<&Path>, env: Option<PathBuf>) -> Result<Self, ConfigError> {
        let Some(path) = flag.map(Path::to_path_buf).or(env) else {
            return Ok(Config::default());
        };
        let text = std::fs::read_to_string(&path)
            .map_err(|source| ConfigError::Read { path: path.clone(), source })?;
        Self::from_toml_str(&text)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.overhead_lo >= self.overhead_hi {
            return Err(ConfigError::Invalid(format!(
                "overhead_lo {} must be below overhead_hi {}",
                self.overhead_lo, self.overhead_hi
            )));
        }
        if self.c <= 0.0 || !self.c.is_finite() {
            return Err(ConfigError::Invalid(format!("c must be positive, got {}", self.c)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(ConfigError::Invalid(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if !(commitment::MIN_PRIME_BITS..=commitment::MAX_PRIME_BITS).contains(&self.prime_bits) {
            return Err(ConfigError::Invalid(format!(
                "prime_bits {} outside {}..={}",
                self.prime_bits,
                commitment::MIN_PRIME_BITS,
                commitment::MAX_PRIME_BITS
            )));
        }
        if self.receipt_bits < receipt::MIN_MODULUS_BITS {
            return Err(ConfigError::Invalid(format!(
                "receipt_bits {} below minimum {}",
                self.receipt_bits,
                receipt::MIN_MODULUS_BITS
            )));
        }
        if self.symbol_size < 1 {
            return Err(ConfigError::Invalid("symbol_size must be at least 1".into()));
        }
        Ok(())
    }

    pub fn plan_options(&self) -> PlanOptions {
        PlanOptions {
            overhead_hi: self.overhead_hi.clone(),
            overhead_lo: self.overhead_lo.clone(),
            c: self.c,
            delta: self.delta,
        }
    }
}
