//! Client for an external sentence-encoder service.
//!
//! Wire format: `POST {endpoint}` with body `{"texts": [...]}`, answered by
//! `{"vectors": [[...], ...]}` in request order.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{EmbedError, Embedder, EmbeddingVector};

#[derive(Debug, Serialize)]
pub struct EmbedRequest<'a> {
    pub texts: &'a [&'a str],
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub vectors: Vec<Vec<f64>>,
}

/// Counting semaphore capping concurrent in-flight requests.
struct InFlight {
    cap: usize,
    used: Mutex<usize>,
    freed: Condvar,
}

struct Permit<'a>(&'a InFlight);

impl InFlight {
    fn new(cap: usize) -> Self {
        Self {
            cap: cap.max(1),
            used: Mutex::new(0),
            freed: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut used = self.used.lock().unwrap_or_else(|e| e.into_inner());
        while *used >= self.cap {
            used = self.freed.wait(used).unwrap_or_else(|e| e.into_inner());
        }
        *used += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut used = self.0.used.lock().unwrap_or_else(|e| e.into_inner());
        *used -= 1;
        self.0.freed.notify_one();
    }
}

pub struct ExternalServiceEmbedder {
    endpoint: String,
    dim: usize,
    normalize: bool,
    agent: ureq::Agent,
    in_flight: InFlight,
}

impl ExternalServiceEmbedder {
    pub fn new(
        endpoint: &str,
        dim: usize,
        normalize: bool,
        timeout: Duration,
        max_in_flight: usize,
    ) -> Result<Self, EmbedError> {
        url::Url::parse(endpoint)
            .map_err(|e| EmbedError::InvalidConfig(format!("bad endpoint {endpoint}: {e}")))?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(true)
            .build()
            .into();
        Ok(Self {
            endpoint: endpoint.to_string(),
            dim,
            normalize,
            agent,
            in_flight: InFlight::new(max_in_flight),
        })
    }

    fn request(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbedError> {
        let _permit = self.in_flight.acquire();
        let unavailable = |e: ureq::Error| EmbedError::ProviderUnavailable(e.to_string());
        let mut resp = self
            .agent
            .post(&self.endpoint)
            .send_json(EmbedRequest { texts })
            .map_err(unavailable)?;
        let body: EmbedResponse = resp.body_mut().read_json().map_err(unavailable)?;
        Ok(body.vectors)
    }
}

impl Embedder for ExternalServiceEmbedder {
    fn name(&self) -> &str {
        "external-service"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        let mut out = self.embed_batch(&[text])?;
        Ok(out.remove(0))
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        super::check_nonempty(texts)?;
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let vectors = self.request(texts)?;
        if vectors.len() != texts.len() {
            return Err(EmbedError::BadProviderResponse(format!(
                "expected {} vectors, got {}",
                texts.len(),
                vectors.len()
            )));
        }
        vectors
            .into_iter()
            .map(|values| {
                if values.len() != self.dim {
                    return Err(EmbedError::BadProviderResponse(format!(
                        "expected dim {}, got {}",
                        self.dim,
                        values.len()
                    )));
                }
                let v = EmbeddingVector::new(values)
                    .map_err(|e| EmbedError::BadProviderResponse(e.to_string()))?;
                if self.normalize {
                    v.normalize()
                } else {
                    Ok(v)
                }
            })
            .collect()
    }
}
