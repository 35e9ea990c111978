//! Text embeddings and cosine similarity.
//!
//! Providers implement [`Embedder`] and are looked up by name in an
//! [`EmbedderRegistry`]. Two are built in: `reference-hash`, a deterministic
//! local bag-of-tokens encoder, and `external-service`, a JSON-over-HTTP
//! client for a real sentence encoder.

mod external;
mod reference;
mod vector;

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::registry::{Registry, RegistryError};

pub use external::{EmbedRequest, EmbedResponse, ExternalServiceEmbedder};
pub use reference::{fnv1a64, tokenize, ReferenceHashEmbedder};
pub use vector::{cosine_similarity, EmbeddingVector, NORM_TOLERANCE};

pub const DEFAULT_DIM: usize = 256;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmbedError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid embedder config: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("zero vector has no direction")]
    DegenerateVector,
    #[error("embedding provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("malformed provider response: {0}")]
    BadProviderResponse(String),
    #[error(transparent)]
    Registry(#[from] RegistryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProviderKind {
    ReferenceHash,
    ExternalService,
}

impl ProviderKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProviderKind::ReferenceHash => "reference-hash",
            ProviderKind::ExternalService => "external-service",
        }
    }
}

impl fmt::Display for ProviderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProviderKind {
    type Err = EmbedError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "reference-hash" => Ok(ProviderKind::ReferenceHash),
            "external-service" => Ok(ProviderKind::ExternalService),
            other => Err(EmbedError::InvalidConfig(format!("unknown provider `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedderConfig {
    pub dim: usize,
    pub provider: ProviderKind,
    pub normalize: bool,
    pub endpoint: Option<String>,
    /// Cap on concurrent requests to an external provider.
    pub max_in_flight: usize,
    pub timeout_ms: u64,
    /// Fall back to `reference-hash` when the external provider is unreachable.
    pub fallback_to_reference: bool,
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        Self {
            dim: DEFAULT_DIM,
            provider: ProviderKind::ReferenceHash,
            normalize: true,
            endpoint: None,
            max_in_flight: 8,
            timeout_ms: 10_000,
            fallback_to_reference: false,
        }
    }
}

impl EmbedderConfig {
    pub fn reference(dim: usize) -> Self {
        Self {
            dim,
            ..Self::default()
        }
    }

    pub fn external(endpoint: &str, dim: usize) -> Self {
        Self {
            dim,
            provider: ProviderKind::ExternalService,
            endpoint: Some(endpoint.to_string()),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), EmbedError> {
        if self.dim < 2 {
            return Err(EmbedError::InvalidConfig(format!("dim must be >= 2, got {}", self.dim)));
        }
        match (self.provider, &self.endpoint) {
            (ProviderKind::ExternalService, None) => Err(EmbedError::InvalidConfig(
                "external-service provider requires an endpoint".into(),
            )),
            (ProviderKind::ReferenceHash, Some(_)) => Err(EmbedError::InvalidConfig(
                "endpoint is only valid for the external-service provider".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Read `EMBED_PROVIDER`, `EMBED_ENDPOINT` and `EMBED_DIM`, defaulting
    /// anything unset.
    pub fn from_env() -> Result<Self, EmbedError> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup<F: Fn(&str) -> Option<String>>(lookup: F) -> Result<Self, EmbedError> {
        let mut cfg = Self::default();
        if let Some(p) = lookup("EMBED_PROVIDER") {
            cfg.provider = p.trim().parse()?;
        }
        cfg.endpoint = lookup("EMBED_ENDPOINT").filter(|s| !s.trim().is_empty());
        if let Some(d) = lookup("EMBED_DIM") {
            cfg.dim = d
                .trim()
                .parse()
                .map_err(|_| EmbedError::InvalidConfig(format!("EMBED_DIM `{d}` is not an integer")))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// A text embedding provider.
pub trait Embedder: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError>;

    /// Embed many texts; element `i` equals `embed(texts[i])`.
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        check_nonempty(texts)?;
        texts.iter().map(|t| self.embed(t)).collect()
    }
}

pub(crate) fn check_nonempty(texts: &[&str]) -> Result<(), EmbedError> {
    match texts.iter().position(|t| t.trim().is_empty()) {
        Some(i) => Err(EmbedError::InvalidInput(format!("text at index {i} is empty"))),
        None => Ok(()),
    }
}

/// Wraps an external provider and retries on the reference embedder when the
/// provider is unreachable.
struct FallbackEmbedder {
    primary: Box<dyn Embedder>,
    fallback: ReferenceHashEmbedder,
}

impl Embedder for FallbackEmbedder {
    fn name(&self) -> &str {
        self.primary.name()
    }

    fn dim(&self) -> usize {
        self.primary.dim()
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        match self.primary.embed(text) {
            Err(EmbedError::ProviderUnavailable(_)) => self.fallback.embed(text),
            other => other,
        }
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        match self.primary.embed_batch(texts) {
            Err(EmbedError::ProviderUnavailable(_)) => self.fallback.embed_batch(texts),
            other => other,
        }
    }
}

pub type EmbedderRegistry = Registry<EmbedderConfig, dyn Embedder, EmbedError>;

/// Registry holding the built-in providers.
pub fn builtin_registry() -> EmbedderRegistry {
    let mut r = EmbedderRegistry::new("embedding provider");
    r.register(ProviderKind::ReferenceHash.as_str(), |cfg: &EmbedderConfig| {
        Ok(Box::new(ReferenceHashEmbedder::new(cfg.dim, cfg.normalize)?) as Box<dyn Embedder>)
    })
    .expect("fresh registry");
    r.register(ProviderKind::ExternalService.as_str(), |cfg: &EmbedderConfig| {
        let endpoint = cfg.endpoint.as_deref().ok_or_else(|| {
            EmbedError::InvalidConfig("external-service provider requires an endpoint".into())
        })?;
        let client = ExternalServiceEmbedder::new(
            endpoint,
            cfg.dim,
            cfg.normalize,
            Duration::from_millis(cfg.timeout_ms),
            cfg.max_in_flight,
        )?;
        if cfg.fallback_to_reference {
            Ok(Box::new(FallbackEmbedder {
                primary: Box::new(client),
                fallback: ReferenceHashEmbedder::new(cfg.dim, cfg.normalize)?,
            }) as Box<dyn Embedder>)
        } else {
            Ok(Box::new(client) as Box<dyn Embedder>)
        }
    })
    .expect("fresh registry");
    r
}

fn shared_registry() -> &'static EmbedderRegistry {
    static REGISTRY: OnceLock<EmbedderRegistry> = OnceLock::new();
    REGISTRY.get_or_init(builtin_registry)
}

/// Instantiate the provider named by `config.provider`.
pub fn build_embedder(config: &EmbedderConfig) -> Result<Box<dyn Embedder>, EmbedError> {
    config.validate()?;
    shared_registry().create(config.provider.as_str(), config)?
}

pub fn embed_text(text: &str, config: &EmbedderConfig) -> Result<EmbeddingVector, EmbedError> {
    if text.trim().is_empty() {
        return Err(EmbedError::InvalidInput("text is empty".into()));
    }
    build_embedder(config)?.embed(text)
}

pub fn embed_batch<S: AsRef<str>>(
    texts: &[S],
    config: &EmbedderConfig,
) -> Result<Vec<EmbeddingVector>, EmbedError> {
    let refs: Vec<&str> = texts.iter().map(AsRef::as_ref).collect();
    check_nonempty(&refs)?;
    if refs.is_empty() {
        return Ok(Vec::new());
    }
    build_embedder(config)?.embed_batch(&refs)
}
