#![allow(dead_code)]

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use chrono::NaiveDate;
use http_body_util::BodyExt;
use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::SeedableRng;
use serde_json::Value;
use sonder_core::experiment::{arm_for, Arm};
use sonder_core::ingestion::{CorpusKey, CorpusStore, CountryCode, QueryCorpus, ResultKind, SearchRecord};
use sonder_service::{AppState, Roster, ServiceConfig};
use tempfile::TempDir;
use tower::ServiceExt;

pub const SEED: u64 = 7;

/// Stored queries and their corpus sizes.
pub const QUERIES: [(&str, usize); 4] = [
    ("climate change", 40),
    ("vaccine safety", 25),
    ("election results", 120),
    ("single source", 1),
];

const WORDS: [&str; 24] = [
    "policy", "energy", "health", "report", "study", "risk", "market", "court", "vote", "data", "science",
    "ocean", "carbon", "trial", "doctor", "budget", "law", "protest", "storm", "school", "farm", "tax", "trade",
    "media",
];

pub fn key(query: &str) -> CorpusKey {
    CorpusKey {
        query: query.into(),
        country: CountryCode::new("US").unwrap(),
        date: NaiveDate::from_ymd_opt(2023, 5, 1).unwrap(),
        kind: ResultKind::Web,
    }
}

pub fn corpus(query: &str, n: usize, seed: u64) -> QueryCorpus {
    let mut rng = StdRng::seed_from_u64(seed);
    let k = key(query);
    let records = (1..=n as u32)
        .map(|rank| {
            let words: Vec<&str> = (0..6).map(|_| *WORDS.choose(&mut rng).unwrap()).collect();
            let mut r = SearchRecord {
                query: query.into(),
                country: k.country.clone(),
                date: k.date,
                rank,
                kind: ResultKind::Web,
                title: format!("{} {}", query, words[0]),
                snippet: words[1..].join(" "),
                url: format!("https://site{}.example.org/{rank}", rank % 7),
                domain: String::new(),
            };
            r.complete().unwrap();
            r
        })
        .collect();
    QueryCorpus::new(k, records).unwrap()
}

pub struct Fixture {
    pub dir: TempDir,
    pub state: AppState,
    pub router: Router,
}

pub fn password(id: &str) -> String {
    format!("pw-{id}")
}

pub fn participant_ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("u{i:03}")).collect()
}

/// First participants of each arm under the fixture seed.
pub fn ids_in_arm(arm: Arm, n: usize) -> Vec<String> {
    participant_ids(400)
        .into_iter()
        .filter(|id| arm_for(SEED, id) == arm)
        .take(n)
        .collect()
}

pub fn fixture_with(edit: impl FnOnce(&mut ServiceConfig)) -> Fixture {
    let dir = TempDir::new().unwrap();
    let store = CorpusStore::open(dir.path().join("store")).unwrap();
    for (i, (q, n)) in QUERIES.iter().enumerate() {
        store.store_corpus(&corpus(q, *n, i as u64)).unwrap();
    }
    let mut roster = Roster::default();
    for id in participant_ids(400) {
        roster.insert(&id, &password(&id));
    }
    let mut config = ServiceConfig {
        data_dir: dir.path().join("store"),
        state_dir: Some(dir.path().join("state")),
        seed: SEED,
        ..ServiceConfig::default()
    };
    edit(&mut config);
    let state = AppState::new(config, roster).unwrap();
    let router = sonder_service::router(state.clone());
    Fixture { dir, state, router }
}

pub fn fixture() -> Fixture {
    fixture_with(|_| {})
}

pub async fn send(router: &Router, method: &str, path: &str, body: Option<Value>) -> (StatusCode, String) {
    let req = Request::builder()
        .method(method)
        .uri(path)
        .header("content-type", "application/json")
        .body(match body {
            Some(v) => Body::from(v.to_string()),
            None => Body::empty(),
        })
        .unwrap();
    let resp = router.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

pub async fn post(router: &Router, path: &str, body: Value) -> (StatusCode, Value) {
    let (status, text) = send(router, "POST", path, Some(body)).await;
    (status, serde_json::from_str(&text).unwrap_or(Value::Null))
}

pub async fn login(router: &Router, id: &str) -> String {
    let (status, body) = post(
        router,
        "/session",
        serde_json::json!({ "participant_id": id, "password": password(id) }),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    body["token"].as_str().unwrap().to_string()
}

/// True if any object anywhere in `v` has a key mentioning completeness.
pub fn has_completeness_key(v: &Value) -> bool {
    match v {
        Value::Object(m) => m
            .iter()
            .any(|(k, v)| k.contains("completeness") || k == "curve" || has_completeness_key(v)),
        Value::Array(a) => a.iter().any(has_completeness_key),
        _ => false,
    }
}
