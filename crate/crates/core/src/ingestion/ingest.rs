use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::Serialize;

use super::{CorpusKey, CorpusStore, IngestError, QueryCorpus, SearchRecord};

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IngestReport {
    /// Records newly persisted.
    pub accepted: usize,
    /// `(line number, reason)` for malformed lines skipped in lenient mode.
    pub skipped_lines: Vec<(usize, String)>,
    /// Records dropped because their `(key, rank)` was already present.
    pub duplicates: usize,
    /// Groups dropped in lenient mode because their ranks were not contiguous.
    pub rejected_corpora: Vec<String>,
    pub corpora_written: usize,
}

/// Validate a JSONL file of search records and merge it into the store.
///
/// In strict mode the first malformed line, duplicate rank or rank gap
/// aborts the run before anything is written. Otherwise offending lines,
/// duplicates and incomplete groups are skipped and reported.
pub fn ingest_jsonl(
    path: &Path,
    store: &CorpusStore,
    strict: bool,
) -> Result<IngestReport, IngestError> {
    let text = fs::read_to_string(path)?;
    let mut report = IngestReport::default();
    let mut groups: BTreeMap<CorpusKey, Vec<SearchRecord>> = BTreeMap::new();

    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        match SearchRecord::parse_line(line) {
            Ok(rec) => groups.entry(rec.key()).or_default().push(rec),
            Err(e) if strict => {
                return Err(IngestError::Parse {
                    line: line_no,
                    message: e.to_string(),
                })
            }
            Err(e) => report.skipped_lines.push((line_no, e.to_string())),
        }
    }

    let mut to_write = Vec::new();
    for (key, incoming) in groups {
        let existing = store.try_load(&key)?;
        let mut seen: BTreeSet<u32> = existing
            .as_ref()
            .map(|c| c.records.iter().map(|r| r.rank).collect())
            .unwrap_or_default();
        let mut fresh = Vec::new();
        for rec in incoming {
            if seen.insert(rec.rank) {
                fresh.push(rec);
            } else if strict {
                return Err(IngestError::DuplicateRank {
                    key: key.to_string(),
                    rank: rec.rank,
                });
            } else {
                report.duplicates += 1;
            }
        }
        if fresh.is_empty() {
            continue;
        }
        let added = fresh.len();
        let mut merged = existing.map(|c| c.records).unwrap_or_default();
        merged.extend(fresh);
        match QueryCorpus::new(key.clone(), merged) {
            Ok(corpus) => to_write.push((corpus, added)),
            Err(e) if strict => return Err(e),
            Err(_) => report.rejected_corpora.push(key.to_string()),
        }
    }

    for (corpus, added) in to_write {
        store.store_corpus(&corpus)?;
        report.accepted += added;
        report.corpora_written += 1;
    }
    Ok(report)
}
