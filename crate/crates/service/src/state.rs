use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fs::OpenOptions;
use std::io::Write;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use rand::Rng;
use serde::Serialize;
use sonder_core::completeness::{build_corpus_vector, score_corpus, CorpusScoring, Lambda};
use sonder_core::embedding::{build_embedder, Embedder, EmbeddingVector};
use sonder_core::experiment::{Arm, ArmAssigner, ClickEvent, ScaleSet, SurveyResponse};
use sonder_core::ingestion::{weights_for_corpus, CorpusKey, CorpusStore, QueryCorpus, ResultKind, DEFAULT_WEIGHT_FLOOR};
use tokio::sync::OnceCell;

use crate::config::ServiceConfig;
use crate::error::ApiError;
use crate::roster::Roster;

/// A result shown to a session, keyed by (query, rank).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ServedEntry {
    pub record_id: String,
    /// Reporting scale.
    pub completeness: f64,
}

#[derive(Debug, Clone)]
pub struct Session {
    pub token: String,
    pub participant_id: String,
    pub arm: Arm,
    pub created_at: DateTime<Utc>,
    pub expires_at: DateTime<Utc>,
    deadline: Instant,
    pub served: HashMap<(String, u32), ServedEntry>,
}

/// One corpus with everything needed to answer searches on it.
#[derive(Debug)]
pub struct ScoredCorpus {
    pub corpus: QueryCorpus,
    pub vectors: Vec<EmbeddingVector>,
    pub scoring: CorpusScoring,
}

pub(crate) const ENDPOINTS: [&str; 5] = ["session", "search", "click", "survey", "scales"];
const LATENCY_WINDOW: usize = 10_000;

#[derive(Default)]
pub(crate) struct Metrics {
    requests: [AtomicU64; 5],
    pub sessions_treatment: AtomicU64,
    pub sessions_control: AtomicU64,
    pub clicks: AtomicU64,
    latencies: Mutex<VecDeque<f64>>,
}

impl Metrics {
    pub fn count(&self, endpoint: &str) {
        if let Some(i) = ENDPOINTS.iter().position(|e| *e == endpoint) {
            self.requests[i].fetch_add(1, Ordering::Relaxed);
        }
    }

    pub fn requests(&self) -> Vec<(&'static str, u64)> {
        ENDPOINTS
            .iter()
            .zip(&self.requests)
            .map(|(e, c)| (*e, c.load(Ordering::Relaxed)))
            .collect()
    }

    pub fn record_latency(&self, d: Duration) {
        let mut l = self.latencies.lock().expect("latency lock");
        if l.len() == LATENCY_WINDOW {
            l.pop_front();
        }
        l.push_back(d.as_secs_f64());
    }

    /// Nearest-rank quantile over the recent window; 0 when empty.
    pub fn latency_quantile(&self, q: f64) -> f64 {
        let mut v: Vec<f64> = self.latencies.lock().expect("latency lock").iter().copied().collect();
        if v.is_empty() {
            return 0.0;
        }
        v.sort_by(f64::total_cmp);
        let idx = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1;
        v[idx]
    }
}

pub(crate) struct Inner {
    pub config: ServiceConfig,
    pub store: CorpusStore,
    pub embedder: Arc<dyn Embedder>,
    pub roster: Roster,
    pub assigner: ArmAssigner,
    pub scales: ScaleSet,
    pub sessions: Mutex<HashMap<String, Session>>,
    pub clicks: Mutex<Vec<ClickEvent>>,
    pub surveys: Mutex<BTreeMap<(String, String), SurveyResponse>>,
    pub index: HashMap<String, Vec<CorpusKey>>,
    pub cache: Mutex<HashMap<CorpusKey, Arc<OnceCell<Arc<ScoredCorpus>>>>>,
    pub metrics: Metrics,
}

/// Shared service state. Cheap to clone.
#[derive(Clone)]
pub struct AppState {
    pub(crate) inner: Arc<Inner>,
}

impl AppState {
    /// The store is indexed once here; corpora ingested later are not served
    /// until restart.
    pub fn new(config: ServiceConfig, roster: Roster) -> Result<Self, String> {
        let store = CorpusStore::open(&config.data_dir).map_err(|e| e.to_string())?;
        let mut index: HashMap<String, Vec<CorpusKey>> = HashMap::new();
        for key in store.keys().map_err(|e| e.to_string())? {
            index.entry(key.query.clone()).or_default().push(key);
        }
        let embedder: Arc<dyn Embedder> = Arc::from(build_embedder(&config.embedder).map_err(|e| e.to_string())?);
        let assigner = match &config.state_dir {
            Some(dir) => {
                std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
                ArmAssigner::open(config.seed, &dir.join("arms.jsonl")).map_err(|e| e.to_string())?
            }
            None => ArmAssigner::new(config.seed),
        };
        let mut scales = ScaleSet::builtin();
        if let Some(dir) = &config.scales_dir {
            scales = scales.with_dir(dir).map_err(|e| e.to_string())?;
        }
        Ok(Self {
            inner: Arc::new(Inner {
                config,
                store,
                embedder,
                roster,
                assigner,
                scales,
                sessions: Mutex::new(HashMap::new()),
                clicks: Mutex::new(Vec::new()),
                surveys: Mutex::new(BTreeMap::new()),
                index,
                cache: Mutex::new(HashMap::new()),
                metrics: Metrics::default(),
            }),
        })
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.inner.config
    }

    /// Every click accepted so far, in arrival order.
    pub fn clicks(&self) -> Vec<ClickEvent> {
        self.inner.clicks.lock().expect("clicks lock").clone()
    }

    pub fn surveys(&self) -> Vec<SurveyResponse> {
        self.inner.surveys.lock().expect("survey lock").values().cloned().collect()
    }

    /// (query, rank) pairs served to a session.
    pub fn served(&self, token: &str) -> Option<Vec<(String, u32)>> {
        let sessions = self.inner.sessions.lock().expect("session lock");
        sessions.get(token).map(|s| {
            let mut v: Vec<_> = s.served.keys().cloned().collect();
            v.sort();
            v
        })
    }

    pub fn arm_of(&self, participant_id: &str) -> Option<Arm> {
        self.inner.assigner.get(participant_id)
    }

    pub(crate) fn open_session(&self, participant_id: &str) -> Result<Session, ApiError> {
        let arm = self
            .inner
            .assigner
            .assign(participant_id)
            .map_err(|e| ApiError::Internal(e.to_string()))?;
        let token = hex::encode(rand::rng().random::<[u8; 32]>());
        let ttl = self.inner.config.session_ttl;
        let created_at = Utc::now();
        let session = Session {
            token: token.clone(),
            participant_id: participant_id.to_string(),
            arm,
            created_at,
            expires_at: created_at + chrono::Duration::from_std(ttl).unwrap_or(chrono::Duration::MAX),
            deadline: Instant::now() + ttl,
            served: HashMap::new(),
        };
        self.inner.sessions.lock().expect("session lock").insert(token, session.clone());
        let counter = match arm {
            Arm::Treatment => &self.inner.metrics.sessions_treatment,
            Arm::Control => &self.inner.metrics.sessions_control,
        };
        counter.fetch_add(1, Ordering::Relaxed);
        Ok(session)
    }

    /// Run `f` on a live session; expired sessions are dropped.
    pub(crate) fn with_session<T>(&self, token: &str, f: impl FnOnce(&mut Session) -> T) -> Result<T, ApiError> {
        let mut sessions = self.inner.sessions.lock().expect("session lock");
        let live = match sessions.get(token) {
            None => return Err(ApiError::Unauthorized("invalid session token".into())),
            Some(s) => Instant::now() < s.deadline,
        };
        if !live {
            sessions.remove(token);
            return Err(ApiError::Unauthorized("session expired".into()));
        }
        Ok(f(sessions.get_mut(token).expect("checked above")))
    }

    /// Exact query match; preferred country, then web results, then the
    /// latest date.
    pub(crate) fn select_corpus(&self, query: &str, country: Option<&str>) -> Result<CorpusKey, ApiError> {
        let keys = self
            .inner
            .index
            .get(query)
            .ok_or_else(|| ApiError::QueryNotIndexed(query.to_string()))?;
        let preferred = country
            .map(str::to_ascii_uppercase)
            .or_else(|| self.inner.config.country.as_ref().map(|c| c.as_str().to_string()));
        keys.iter()
            .max_by_key(|k| {
                (
                    preferred.as_deref() == Some(k.country.as_str()),
                    k.kind == ResultKind::Web,
                    k.date,
                    std::cmp::Reverse(k.country.as_str().to_string()),
                )
            })
            .cloned()
            .ok_or_else(|| ApiError::QueryNotIndexed(query.to_string()))
    }

    /// Scored corpus for a key, computed once off the async workers.
    pub(crate) async fn scored(&self, key: &CorpusKey) -> Result<Arc<ScoredCorpus>, ApiError> {
        let cell = {
            let mut cache = self.inner.cache.lock().expect("cache lock");
            cache.entry(key.clone()).or_default().clone()
        };
        let state = self.clone();
        let key = key.clone();
        cell.get_or_try_init(|| async move {
            tokio::task::spawn_blocking(move || state.score_blocking(&key))
                .await
                .map_err(|e| ApiError::Internal(e.to_string()))?
        })
        .await
        .cloned()
    }

    fn score_blocking(&self, key: &CorpusKey) -> Result<Arc<ScoredCorpus>, ApiError> {
        let internal = |e: &dyn std::fmt::Display| ApiError::Internal(e.to_string());
        let corpus = self.inner.store.load_corpus(key).map_err(|e| internal(&e))?;
        let texts = corpus.texts();
        let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
        let vectors = self.inner.embedder.embed_batch(&refs).map_err(|e| internal(&e))?;
        let query_vec = self.inner.embedder.embed(&key.query).map_err(|e| internal(&e))?;
        let ids: Vec<String> = corpus.records.iter().map(|r| r.record_id()).collect();
        let weights = self
            .inner
            .config
            .weights
            .as_ref()
            .map(|w| weights_for_corpus(&corpus, w, DEFAULT_WEIGHT_FLOOR));
        // validate weights up front for a clearer error
        build_corpus_vector(&vectors, weights.as_deref()).map_err(|e| internal(&e))?;
        let scoring = score_corpus(&query_vec, &vectors, &ids, weights.as_deref(), Lambda::RELEVANCE_ONLY)
            .map_err(|e| internal(&e))?;
        Ok(Arc::new(ScoredCorpus { corpus, vectors, scoring }))
    }

    pub(crate) fn append_line(&self, file: &str, line: &str) -> Result<(), ApiError> {
        if let Some(dir) = &self.inner.config.state_dir {
            let path: PathBuf = dir.join(file);
            let mut f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(&path)
                .map_err(|e| ApiError::Internal(format!("{}: {e}", path.display())))?;
            writeln!(f, "{line}").map_err(|e| ApiError::Internal(e.to_string()))?;
        }
        Ok(())
    }
}
