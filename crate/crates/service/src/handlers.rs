use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::atomic::Ordering;
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::header;
use axum::response::IntoResponse;
use axum::Json;
use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sonder_core::completeness::{reporting_scale, rerank, subset_completeness, Lambda};
use sonder_core::experiment::{score_survey, validate_answers, Arm, ClickEvent, ExperimentError, SurveyResponse, SurveyScale};

use crate::config::{DEFAULT_MAX_RESULTS, MAX_RESULTS, MIN_RESULTS};
use crate::error::ApiError;
use crate::roster::LoginError;
use crate::state::{AppState, ServedEntry};

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::BadRequest(format!("malformed request: {e}")))
}

#[derive(Debug, Deserialize)]
pub struct SessionRequest {
    pub participant_id: String,
    pub password: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionResponse {
    pub token: String,
    pub participant_id: String,
    /// True for the treatment arm; the client shows scores only then.
    pub scores_visible: bool,
    pub created_at: DateTime<Utc>,
    pub expires_at: DateTime<Utc>,
}

pub async fn session(State(state): State<AppState>, body: Bytes) -> Result<Json<SessionResponse>, ApiError> {
    state.inner.metrics.count("session");
    let req: SessionRequest = parse(&body)?;
    state.inner.roster.verify(&req.participant_id, &req.password).map_err(|e| match e {
        LoginError::UnknownParticipant => ApiError::UnknownParticipant(req.participant_id.clone()),
        LoginError::BadPassword => ApiError::Unauthorized("bad credentials".into()),
    })?;
    let s = state.open_session(&req.participant_id)?;
    Ok(Json(SessionResponse {
        token: s.token,
        participant_id: s.participant_id,
        scores_visible: s.arm.is_treatment(),
        created_at: s.created_at,
        expires_at: s.expires_at,
    }))
}

#[derive(Debug, Deserialize)]
pub struct SearchRequest {
    pub session_token: String,
    pub query: String,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub max_results: Option<usize>,
    #[serde(default)]
    pub country: Option<String>,
    #[serde(default)]
    pub debug: bool,
}

/// Score fields are `None` for control sessions and skipped entirely.
#[derive(Debug, Serialize)]
pub struct ResultView {
    pub rank: u32,
    pub record_id: String,
    pub title: String,
    pub snippet: String,
    pub url: String,
    pub domain: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relevance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub completeness: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blended: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct CurveView {
    pub fraction: f64,
    pub value: f64,
}

#[derive(Debug, Serialize)]
pub struct RawView {
    pub relevance: Vec<f64>,
    pub completeness: Vec<f64>,
    pub cumulative_completeness: f64,
}

#[derive(Debug, Serialize)]
pub struct SearchResponse {
    pub query: String,
    pub corpus: String,
    pub scores_visible: bool,
    pub total_results: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub results: Vec<ResultView>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cumulative_completeness: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curve: Option<Vec<CurveView>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw: Option<RawView>,
}

pub async fn search(State(state): State<AppState>, body: Bytes) -> Result<Json<SearchResponse>, ApiError> {
    state.inner.metrics.count("search");
    let started = Instant::now();
    let out = search_inner(&state, &body).await;
    state.inner.metrics.record_latency(started.elapsed());
    out.map(Json)
}

async fn search_inner(state: &AppState, body: &Bytes) -> Result<SearchResponse, ApiError> {
    let req: SearchRequest = parse(body)?;
    let lambda = req
        .lambda
        .map(|l| Lambda::new(l).map_err(|e| ApiError::BadRequest(e.to_string())))
        .transpose()?;
    let max_results = req.max_results.unwrap_or(DEFAULT_MAX_RESULTS);
    if !(MIN_RESULTS..=MAX_RESULTS).contains(&max_results) {
        return Err(ApiError::BadRequest(format!(
            "max_results must be in {MIN_RESULTS}..={MAX_RESULTS}, got {max_results}"
        )));
    }
    let query = req.query.trim().to_string();
    if query.is_empty() {
        return Err(ApiError::BadRequest("query is empty".into()));
    }
    let arm = state.with_session(&req.session_token, |s| s.arm)?;
    let key = state.select_corpus(&query, req.country.as_deref())?;
    let scored = state.scored(&key).await?;

    // indices into the corpus, in display order
    let order: Vec<usize> = match lambda {
        Some(l) if arm.is_treatment() => rerank(scored.scoring.results.clone(), l)
            .iter()
            .map(|r| r.rank as usize - 1)
            .collect(),
        _ => (0..scored.corpus.len()).collect(),
    };
    let shown = &order[..order.len().min(max_results)];
    let treated = arm == Arm::Treatment;

    let results: Vec<ResultView> = shown
        .iter()
        .map(|&i| {
            let rec = &scored.corpus.records[i];
            let s = &scored.scoring.results[i];
            ResultView {
                rank: rec.rank,
                record_id: s.record_id.clone(),
                title: rec.title.clone(),
                snippet: rec.snippet.clone(),
                url: rec.url.clone(),
                domain: rec.domain.clone(),
                relevance: treated.then(|| reporting_scale(s.relevance)),
                completeness: treated.then(|| reporting_scale(s.completeness)),
                blended: lambda.filter(|_| treated).map(|l| {
                    reporting_scale(sonder_core::completeness::blended_score(s.relevance, s.completeness, l))
                }),
            }
        })
        .collect();

    let (cumulative, curve, raw) = if treated {
        let cum = subset_completeness(shown.iter().map(|&i| &scored.vectors[i]), &scored.scoring.corpus)
            .map_err(|e| ApiError::Internal(e.to_string()))?;
        let curve = scored
            .scoring
            .curve
            .points
            .iter()
            .map(|p| CurveView {
                fraction: p.fraction,
                value: reporting_scale(p.value),
            })
            .collect();
        let raw = (req.debug && state.config().debug_raw).then(|| RawView {
            relevance: shown.iter().map(|&i| scored.scoring.results[i].relevance).collect(),
            completeness: shown.iter().map(|&i| scored.scoring.results[i].completeness).collect(),
            cumulative_completeness: cum,
        });
        (Some(reporting_scale(cum)), Some(curve), raw)
    } else {
        (None, None, None)
    };

    let served: Vec<((String, u32), ServedEntry)> = shown
        .iter()
        .map(|&i| {
            (
                (query.clone(), scored.corpus.records[i].rank),
                ServedEntry {
                    record_id: scored.scoring.results[i].record_id.clone(),
                    completeness: reporting_scale(scored.scoring.results[i].completeness),
                },
            )
        })
        .collect();
    // the session may have expired while scoring; that still rejects
    state.with_session(&req.session_token, |s| s.served.extend(served))?;

    Ok(SearchResponse {
        query,
        corpus: key.to_string(),
        scores_visible: treated,
        total_results: scored.corpus.len(),
        lambda: lambda.filter(|_| treated).map(Lambda::value),
        results,
        cumulative_completeness: cumulative,
        curve,
        raw,
    })
}

#[derive(Debug, Deserialize)]
pub struct ClickRequest {
    pub session_token: String,
    pub query: String,
    pub rank: u32,
    #[serde(default)]
    pub result_id: Option<String>,
    #[serde(default)]
    pub topic: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ClickAck {
    pub accepted: bool,
    pub participant_id: String,
    pub query: String,
    pub rank: u32,
    pub record_id: String,
}

pub async fn click(State(state): State<AppState>, body: Bytes) -> Result<Json<ClickAck>, ApiError> {
    state.inner.metrics.count("click");
    let req: ClickRequest = parse(&body)?;
    let query = req.query.trim().to_string();
    let (participant, entry) = state.with_session(&req.session_token, |s| {
        (s.participant_id.clone(), s.served.get(&(query.clone(), req.rank)).cloned())
    })?;
    let entry = entry
        .filter(|e| req.result_id.as_ref().is_none_or(|id| *id == e.record_id))
        .ok_or_else(|| ApiError::UnservedResult {
            query: query.clone(),
            rank: req.rank,
        })?;
    let event = ClickEvent {
        participant_id: participant.clone(),
        topic: req.topic.unwrap_or_default(),
        query: query.clone(),
        rank_clicked: req.rank,
        completeness_of_result: entry.completeness,
        timestamp: Utc::now(),
    };
    let line = serde_json::to_string(&event).map_err(|e| ApiError::Internal(e.to_string()))?;
    {
        let mut clicks = state.inner.clicks.lock().expect("clicks lock");
        state.append_line("clicks.jsonl", &line)?;
        clicks.push(event);
    }
    state.inner.metrics.clicks.fetch_add(1, Ordering::Relaxed);
    Ok(Json(ClickAck {
        accepted: true,
        participant_id: participant,
        query,
        rank: req.rank,
        record_id: entry.record_id,
    }))
}

#[derive(Debug, Deserialize)]
pub struct SurveyRequest {
    pub session_token: String,
    pub scale: String,
    pub answers: Vec<i32>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SurveyReceipt {
    pub participant_id: String,
    pub scale: String,
    pub n_answers: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overall: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dimensions: Option<BTreeMap<String, f64>>,
}

pub async fn survey(State(state): State<AppState>, body: Bytes) -> Result<Json<SurveyReceipt>, ApiError> {
    state.inner.metrics.count("survey");
    let req: SurveyRequest = parse(&body)?;
    let participant = state.with_session(&req.session_token, |s| s.participant_id.clone())?;
    let scale = state
        .inner
        .scales
        .get(&req.scale)
        .ok_or_else(|| ApiError::UnknownScale(req.scale.clone()))?;
    validate_answers(&req.answers, scale).map_err(answer_error)?;
    let response = SurveyResponse {
        participant_id: participant.clone(),
        scale: req.scale.clone(),
        answers: req.answers,
    };
    let score = match score_survey(&response, scale) {
        Ok(s) => Some(s),
        Err(ExperimentError::UnscoredScale(_)) => None,
        Err(e) => return Err(answer_error(e)),
    };
    {
        let mut surveys = state.inner.surveys.lock().expect("survey lock");
        let key = (participant.clone(), req.scale.clone());
        if surveys.contains_key(&key) {
            return Err(ApiError::AlreadySubmitted { scale: req.scale });
        }
        let line = serde_json::to_string(&response).map_err(|e| ApiError::Internal(e.to_string()))?;
        state.append_line("surveys.jsonl", &line)?;
        surveys.insert(key, response);
    }
    Ok(Json(SurveyReceipt {
        participant_id: participant,
        scale: req.scale,
        n_answers: scale.len(),
        overall: score.as_ref().map(|s| s.overall),
        dimensions: score.map(|s| s.by_dimension),
    }))
}

fn answer_error(e: ExperimentError) -> ApiError {
    match e {
        ExperimentError::InvalidResponse { item: Some(item), message } => ApiError::InvalidAnswer { item, message },
        ExperimentError::InvalidResponse { item: None, message } => ApiError::BadRequest(message),
        other => ApiError::Internal(other.to_string()),
    }
}

pub async fn scale(State(state): State<AppState>, Path(name): Path<String>) -> Result<Json<SurveyScale>, ApiError> {
    state.inner.metrics.count("scales");
    state
        .inner
        .scales
        .get(&name)
        .cloned()
        .map(Json)
        .ok_or(ApiError::UnknownScale(name))
}

pub async fn health() -> impl IntoResponse {
    Json(serde_json::json!({ "status": "ok" }))
}

pub async fn metrics(State(state): State<AppState>) -> impl IntoResponse {
    let m = &state.inner.metrics;
    let mut out = String::new();
    out.push_str("# TYPE sonder_requests_total counter\n");
    for (endpoint, n) in m.requests() {
        let _ = writeln!(out, "sonder_requests_total{{endpoint=\"{endpoint}\"}} {n}");
    }
    out.push_str("# TYPE sonder_search_latency_seconds summary\n");
    for q in [0.5, 0.99] {
        let _ = writeln!(
            out,
            "sonder_search_latency_seconds{{quantile=\"{q}\"}} {:.6}",
            m.latency_quantile(q)
        );
    }
    let t = m.sessions_treatment.load(Ordering::Relaxed);
    let c = m.sessions_control.load(Ordering::Relaxed);
    out.push_str("# TYPE sonder_sessions_total counter\n");
    let _ = writeln!(out, "sonder_sessions_total {}", t + c);
    let _ = writeln!(out, "sonder_sessions_by_arm{{arm=\"treatment\"}} {t}");
    let _ = writeln!(out, "sonder_sessions_by_arm{{arm=\"control\"}} {c}");
    let _ = writeln!(out, "sonder_clicks_total {}", m.clicks.load(Ordering::Relaxed));
    let _ = writeln!(out, "sonder_store_size_bytes {}", state.inner.store.size_bytes());
    ([(header::CONTENT_TYPE, "text/plain; version=0.0.4")], out)
}
