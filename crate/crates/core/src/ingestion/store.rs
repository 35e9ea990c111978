//! On-disk corpus store.
//!
//! One line-delimited JSON file per corpus under
//! `<root>/<COUNTRY>/<DATE>/<KIND>/<slug>-<hash>.jsonl`. Writes go to a
//! temporary file that is renamed into place, so readers never observe a
//! partial corpus; writers serialize per key.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use super::{CorpusKey, IngestError, QueryCorpus, SearchRecord};
use crate::embedding::fnv1a64;

pub const DATA_DIR_ENV: &str = "SONDER_DATA_DIR";

#[derive(Debug)]
pub struct CorpusStore {
    root: PathBuf,
    locks: Mutex<HashMap<CorpusKey, Arc<Mutex<()>>>>,
}

impl CorpusStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, IngestError> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self {
            root,
            locks: Mutex::new(HashMap::new()),
        })
    }

    /// Open the store at `$SONDER_DATA_DIR`, or `./data` when unset.
    pub fn from_env() -> Result<Self, IngestError> {
        let root = std::env::var_os(DATA_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("data"));
        Self::open(root)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path_for(&self, key: &CorpusKey) -> PathBuf {
        let slug: String = key
            .query
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '-' })
            .take(48)
            .collect();
        let hash = fnv1a64(key.query.as_bytes());
        self.root
            .join(key.country.as_str())
            .join(key.date.to_string())
            .join(key.kind.as_str())
            .join(format!("{slug}-{hash:016x}.jsonl"))
    }

    fn key_lock(&self, key: &CorpusKey) -> Arc<Mutex<()>> {
        let mut locks = self.locks.lock().unwrap_or_else(|e| e.into_inner());
        locks.entry(key.clone()).or_default().clone()
    }

    pub fn contains(&self, key: &CorpusKey) -> bool {
        self.path_for(key).is_file()
    }

    pub fn store_corpus(&self, corpus: &QueryCorpus) -> Result<(), IngestError> {
        let lock = self.key_lock(&corpus.key);
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
        let path = self.path_for(&corpus.key);
        let dir = path.parent().expect("store paths have a parent");
        fs::create_dir_all(dir)?;
        let tmp = path.with_extension(format!("jsonl.tmp{}", std::process::id()));
        {
            let mut out = std::io::BufWriter::new(fs::File::create(&tmp)?);
            for r in &corpus.records {
                serde_json::to_writer(&mut out, r)
                    .map_err(|e| IngestError::CorruptStore(e.to_string()))?;
                out.write_all(b"\n")?;
            }
            out.flush()?;
        }
        fs::rename(&tmp, &path)?;
        Ok(())
    }

    pub fn load_corpus(&self, key: &CorpusKey) -> Result<QueryCorpus, IngestError> {
        let path = self.path_for(key);
        if !path.is_file() {
            return Err(IngestError::NotFound(key.to_string()));
        }
        let corpus = read_corpus_file(&path)?;
        if &corpus.key != key {
            return Err(IngestError::CorruptStore(format!(
                "{} holds {}, expected {key}",
                path.display(),
                corpus.key
            )));
        }
        Ok(corpus)
    }

    /// Load if present, `None` when never stored.
    pub fn try_load(&self, key: &CorpusKey) -> Result<Option<QueryCorpus>, IngestError> {
        match self.load_corpus(key) {
            Ok(c) => Ok(Some(c)),
            Err(IngestError::NotFound(_)) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Keys of every stored corpus, sorted.
    pub fn keys(&self) -> Result<Vec<CorpusKey>, IngestError> {
        let mut keys = Vec::new();
        let mut stack = vec![self.root.clone()];
        while let Some(dir) = stack.pop() {
            for entry in fs::read_dir(&dir)? {
                let path = entry?.path();
                if path.is_dir() {
                    stack.push(path);
                } else if path.extension().is_some_and(|e| e == "jsonl") {
                    let mut first = String::new();
                    BufReader::new(fs::File::open(&path)?).read_line(&mut first)?;
                    let rec: SearchRecord = serde_json::from_str(first.trim()).map_err(|e| {
                        IngestError::CorruptStore(format!("{}: {e}", path.display()))
                    })?;
                    keys.push(rec.key());
                }
            }
        }
        keys.sort();
        Ok(keys)
    }

    pub fn load_all(&self) -> Result<Vec<QueryCorpus>, IngestError> {
        self.keys()?.iter().map(|k| self.load_corpus(k)).collect()
    }

    /// Total bytes on disk.
    pub fn size_bytes(&self) -> u64 {
        let mut total = 0;
        let mut stack = vec![self.root.clone()];
        while let Some(dir) = stack.pop() {
            let Ok(entries) = fs::read_dir(&dir) else { continue };
            for entry in entries.flatten() {
                let path = entry.path();
                if path.is_dir() {
                    stack.push(path);
                } else if let Ok(meta) = entry.metadata() {
                    total += meta.len();
                }
            }
        }
        total
    }
}

fn read_corpus_file(path: &Path) -> Result<QueryCorpus, IngestError> {
    let corrupt = |msg: String| IngestError::CorruptStore(format!("{}: {msg}", path.display()));
    let reader = BufReader::new(fs::File::open(path)?);
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: SearchRecord =
            serde_json::from_str(&line).map_err(|e| corrupt(format!("line {}: {e}", i + 1)))?;
        records.push(rec);
    }
    let key = records
        .first()
        .map(SearchRecord::key)
        .ok_or_else(|| corrupt("empty corpus file".into()))?;
    QueryCorpus::new(key, records).map_err(|e| corrupt(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingestion::{CountryCode, ResultKind};
    use chrono::NaiveDate;

    fn corpus(query: &str, n: u32) -> QueryCorpus {
        let key = CorpusKey {
            query: query.into(),
            country: CountryCode::new("US").unwrap(),
            date: NaiveDate::from_ymd_opt(2022, 1, 1).unwrap(),
            kind: ResultKind::Web,
        };
        let records = (1..=n)
            .map(|rank| SearchRecord {
                query: query.into(),
                country: key.country.clone(),
                date: key.date,
                rank,
                kind: key.kind,
                title: format!("title {rank}"),
                snippet: format!("snippet {rank}"),
                url: format!("https://site{rank}.example.com/page"),
                domain: "example.com".into(),
            })
            .collect();
        QueryCorpus::new(key, records).unwrap()
    }

    #[test]
    fn round_trip_and_not_found() {
        let dir = tempfile::tempdir().unwrap();
        let store = CorpusStore::open(dir.path()).unwrap();
        let c = corpus("floods in pakistan", 3);
        assert!(matches!(store.load_corpus(&c.key), Err(IngestError::NotFound(_))));
        store.store_corpus(&c).unwrap();
        assert_eq!(store.load_corpus(&c.key).unwrap(), c);
        assert_eq!(store.keys().unwrap(), vec![c.key.clone()]);
        assert!(store.size_bytes() > 0);
    }

    #[test]
    fn corrupt_file_detected() {
        let dir = tempfile::tempdir().unwrap();
        let store = CorpusStore::open(dir.path()).unwrap();
        let c = corpus("q", 2);
        store.store_corpus(&c).unwrap();
        fs::write(store.path_for(&c.key), "{not json\n").unwrap();
        assert!(matches!(store.load_corpus(&c.key), Err(IngestError::CorruptStore(_))));
    }

    #[test]
    fn concurrent_loads_agree() {
        let dir = tempfile::tempdir().unwrap();
        let store = Arc::new(CorpusStore::open(dir.path()).unwrap());
        let c = corpus("q", 50);
        store.store_corpus(&c).unwrap();
        let handles: Vec<_> = (0..8)
            .map(|_| {
                let store = store.clone();
                let key = c.key.clone();
                std::thread::spawn(move || store.load_corpus(&key).unwrap())
            })
            .collect();
        for h in handles {
            assert_eq!(h.join().unwrap(), c);
        }
    }
}
