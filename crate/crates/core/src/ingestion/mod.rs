//! Search-result corpora: records, the on-disk store, JSONL ingestion,
//! trending-query sources and PageRank domain weights.

mod ingest;
mod pagerank;
mod record;
mod store;
mod trending;

use thiserror::Error;

use crate::registry::RegistryError;

pub use ingest::{ingest_jsonl, IngestReport};
pub use pagerank::{
    pagerank, weights_for_corpus, DomainGraph, DomainWeights, PageRankParams, DEFAULT_WEIGHT_FLOOR,
};
pub use record::{registrable_domain, CorpusKey, CountryCode, QueryCorpus, ResultKind, SearchRecord};
pub use store::{CorpusStore, DATA_DIR_ENV};
pub use trending::{
    build_trending_source, builtin_trending_registry, fetch_trending, FixtureTrending,
    TrendingConfig, TrendingRegistry, TrendingSource,
};

/// Results per query used when generating fixture corpora.
pub const FIXTURE_RESULTS_PER_QUERY: usize = 320;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("duplicate rank {rank} in {key}")]
    DuplicateRank { key: String, rank: u32 },
    #[error("ranks in {key} are not contiguous: rank {missing} is missing")]
    NonContiguousRanks { key: String, missing: u32 },
    #[error("not found: {0}")]
    NotFound(String),
    #[error("corrupt store: {0}")]
    CorruptStore(String),
    #[error("provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("pagerank did not converge within {iterations} iterations")]
    NoConvergence {
        iterations: usize,
        last: DomainWeights,
    },
    #[error(transparent)]
    Registry(#[from] RegistryError),
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn corpus(domains: &[&str]) -> QueryCorpus {
        let key = CorpusKey {
            query: "q".into(),
            country: CountryCode::new("US").unwrap(),
            date: NaiveDate::from_ymd_opt(2022, 1, 1).unwrap(),
            kind: ResultKind::Web,
        };
        let records = domains
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let mut r = SearchRecord {
                    query: "q".into(),
                    country: key.country.clone(),
                    date: key.date,
                    rank: i as u32 + 1,
                    kind: ResultKind::Web,
                    title: "t".into(),
                    snippet: "s".into(),
                    url: format!("https://www.{d}/x"),
                    domain: String::new(),
                };
                r.complete().unwrap();
                r
            })
            .collect();
        QueryCorpus::new(key, records).unwrap()
    }

    fn weights() -> DomainWeights {
        DomainWeights(
            [("a.com".to_string(), 0.6), ("b.com".to_string(), 0.4)]
                .into_iter()
                .collect(),
        )
    }

    #[test]
    fn unknown_domains_get_floor() {
        let w = weights_for_corpus(&corpus(&["x.com", "y.org"]), &weights(), 1e-6);
        assert_eq!(w, vec![1e-6, 1e-6]);
    }

    #[test]
    fn known_domains_copied() {
        let w = weights_for_corpus(&corpus(&["b.com", "a.com"]), &weights(), 1e-6);
        assert_eq!(w, vec![0.4, 0.6]);
    }

    #[test]
    fn mixed_domains_elementwise() {
        let c = corpus(&["a.com", "z.net", "b.com", "a.com"]);
        let w = weights_for_corpus(&c, &weights(), 0.01);
        let expected: Vec<f64> = c
            .records
            .iter()
            .map(|r| match r.domain.as_str() {
                "a.com" => 0.6,
                "b.com" => 0.4,
                _ => 0.01,
            })
            .collect();
        assert_eq!(w, expected);
    }
}
