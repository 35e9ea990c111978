use std::path::PathBuf;
use std::time::Duration;

use sonder_core::embedding::{EmbedError, EmbedderConfig};
use sonder_core::ingestion::{CountryCode, DomainWeights, DATA_DIR_ENV};

pub const PORT_ENV: &str = "SONDER_PORT";
pub const SEED_ENV: &str = "SONDER_SEED";
pub const STATE_DIR_ENV: &str = "SONDER_STATE_DIR";
pub const ROSTER_ENV: &str = "SONDER_ROSTER";

pub const DEFAULT_PORT: u16 = 8080;
pub const DEFAULT_MAX_RESULTS: usize = 10;
pub const MIN_RESULTS: usize = 10;
pub const MAX_RESULTS: usize = 100;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Corpus store root.
    pub data_dir: PathBuf,
    /// Arms, clicks and survey answers are appended here when set.
    pub state_dir: Option<PathBuf>,
    pub roster_path: Option<PathBuf>,
    pub port: u16,
    pub seed: u64,
    pub session_ttl: Duration,
    /// Preferred market when a query is stored for several countries.
    pub country: Option<CountryCode>,
    /// Allow `debug: true` requests to see raw cosines.
    pub debug_raw: bool,
    pub static_dir: Option<PathBuf>,
    pub scales_dir: Option<PathBuf>,
    pub embedder: EmbedderConfig,
    pub weights: Option<DomainWeights>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            data_dir: PathBuf::from("data"),
            state_dir: None,
            roster_path: None,
            port: DEFAULT_PORT,
            seed: 0,
            session_ttl: Duration::from_secs(2 * 60 * 60),
            country: None,
            debug_raw: false,
            static_dir: None,
            scales_dir: None,
            embedder: EmbedderConfig::default(),
            weights: None,
        }
    }
}

impl ServiceConfig {
    /// Defaults overridden by SONDER_* and EMBED_* variables.
    pub fn from_env() -> Result<Self, String> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self, String> {
        let mut cfg = Self::default();
        if let Some(dir) = get(DATA_DIR_ENV) {
            cfg.data_dir = dir.into();
        }
        cfg.state_dir = get(STATE_DIR_ENV).map(PathBuf::from);
        cfg.roster_path = get(ROSTER_ENV).map(PathBuf::from);
        if let Some(p) = get(PORT_ENV) {
            cfg.port = p.parse().map_err(|_| format!("{PORT_ENV}={p} is not a port"))?;
        }
        if let Some(s) = get(SEED_ENV) {
            cfg.seed = s.parse().map_err(|_| format!("{SEED_ENV}={s} is not an integer"))?;
        }
        cfg.embedder = EmbedderConfig::from_lookup(&get).map_err(|e: EmbedError| e.to_string())?;
        Ok(cfg)
    }
}
