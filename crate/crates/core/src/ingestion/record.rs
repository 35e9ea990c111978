use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::IngestError;

/// ISO 3166-1 alpha-2 country code, stored uppercase.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CountryCode(String);

impl CountryCode {
    pub fn new(code: &str) -> Result<Self, IngestError> {
        let code = code.trim();
        if code.len() != 2 || !code.chars().all(|c| c.is_ascii_alphabetic()) {
            return Err(IngestError::InvalidRecord(format!(
                "country `{code}` is not an ISO alpha-2 code"
            )));
        }
        Ok(CountryCode(code.to_ascii_uppercase()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for CountryCode {
    type Error = IngestError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        CountryCode::new(&s)
    }
}

impl From<CountryCode> for String {
    fn from(c: CountryCode) -> String {
        c.0
    }
}

impl fmt::Display for CountryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for CountryCode {
    type Err = IngestError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CountryCode::new(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResultKind {
    Web,
    News,
}

impl ResultKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ResultKind::Web => "web",
            ResultKind::News => "news",
        }
    }
}

impl fmt::Display for ResultKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ResultKind {
    type Err = IngestError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "web" => Ok(ResultKind::Web),
            "news" => Ok(ResultKind::News),
            other => Err(IngestError::InvalidRecord(format!("unknown kind `{other}`"))),
        }
    }
}

/// One fetched search result.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchRecord {
    pub query: String,
    pub country: CountryCode,
    pub date: NaiveDate,
    pub rank: u32,
    pub kind: ResultKind,
    pub title: String,
    pub snippet: String,
    pub url: String,
    /// Registrable domain of `url`; derived from the host when absent.
    #[serde(default)]
    pub domain: String,
}

impl SearchRecord {
    /// Parse one JSONL line, deriving `domain` if missing and validating
    /// the record.
    pub fn parse_line(line: &str) -> Result<Self, IngestError> {
        let mut rec: SearchRecord = serde_json::from_str(line)
            .map_err(|e| IngestError::InvalidRecord(e.to_string()))?;
        rec.complete()?;
        Ok(rec)
    }

    /// Fill in the domain if empty and check record invariants.
    pub fn complete(&mut self) -> Result<(), IngestError> {
        if self.query.trim().is_empty() {
            return Err(IngestError::InvalidRecord("query is empty".into()));
        }
        if self.rank == 0 {
            return Err(IngestError::InvalidRecord("rank must be >= 1".into()));
        }
        let host = url_host(&self.url)?;
        if self.domain.is_empty() {
            self.domain = registrable_domain(&host);
        } else {
            let domain = self.domain.trim().trim_end_matches('.').to_ascii_lowercase();
            if !(host == domain || host.ends_with(&format!(".{domain}"))) {
                return Err(IngestError::InvalidRecord(format!(
                    "domain `{}` is not a suffix of host `{host}`",
                    self.domain
                )));
            }
            self.domain = domain;
        }
        Ok(())
    }

    pub fn key(&self) -> CorpusKey {
        CorpusKey {
            query: self.query.clone(),
            country: self.country.clone(),
            date: self.date,
            kind: self.kind,
        }
    }

    /// Text a searcher sees on the results page.
    pub fn text(&self) -> String {
        format!("{} {}", self.title, self.snippet)
    }

    /// Stable identifier derived from the URL and rank.
    pub fn record_id(&self) -> String {
        let h = crate::embedding::fnv1a64(format!("{}#{}", self.url, self.rank).as_bytes());
        format!("{h:016x}")
    }
}

fn url_host(raw: &str) -> Result<String, IngestError> {
    let parsed = url::Url::parse(raw)
        .map_err(|e| IngestError::InvalidRecord(format!("bad url `{raw}`: {e}")))?;
    let host = parsed
        .host_str()
        .ok_or_else(|| IngestError::InvalidRecord(format!("url `{raw}` has no host")))?;
    Ok(host.trim_end_matches('.').to_ascii_lowercase())
}

/// Second-level labels under which registrations happen one level deeper.
const MULTI_LABEL_SUFFIXES: &[&str] = &[
    "ac.uk", "co.uk", "gov.uk", "org.uk", "ltd.uk", "me.uk", "net.uk", "com.au", "net.au",
    "org.au", "edu.au", "gov.au", "co.nz", "org.nz", "co.jp", "ne.jp", "or.jp", "ac.jp",
    "co.in", "net.in", "org.in", "gov.in", "com.br", "org.br", "gov.br", "com.mx", "gob.mx",
    "co.za", "org.za", "gov.za", "com.cn", "net.cn", "org.cn", "gov.cn", "com.tr", "gov.tr",
    "co.kr", "or.kr", "com.sg", "gov.sg", "com.ar", "gob.ar", "com.eg", "com.sa", "com.pk",
    "com.ng", "co.ke", "com.my", "co.id", "or.id", "com.ph", "com.vn", "com.tw", "co.il",
    "org.il", "com.hk", "com.ua", "com.pe", "com.co", "com.ec", "co.th", "ac.th", "com.bd",
];

/// Registrable domain of a host name: the last two labels, or three when
/// the host sits under a known multi-label public suffix. IP literals are
/// returned unchanged.
pub fn registrable_domain(host: &str) -> String {
    let host = host.trim_end_matches('.').to_ascii_lowercase();
    if host.parse::<std::net::IpAddr>().is_ok() || host.starts_with('[') {
        return host;
    }
    let labels: Vec<&str> = host.split('.').filter(|l| !l.is_empty()).collect();
    if labels.len() <= 2 {
        return labels.join(".");
    }
    let last_two = labels[labels.len() - 2..].join(".");
    let take = if MULTI_LABEL_SUFFIXES.contains(&last_two.as_str()) { 3 } else { 2 };
    labels[labels.len() - take..].join(".")
}

/// Identifies one query's result list.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CorpusKey {
    pub query: String,
    pub country: CountryCode,
    pub date: NaiveDate,
    pub kind: ResultKind,
}

impl fmt::Display for CorpusKey {
    /// `COUNTRY:DATE:KIND:QUERY`; the query comes last so it may contain colons.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}:{}", self.country, self.date, self.kind, self.query)
    }
}

impl FromStr for CorpusKey {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.splitn(4, ':');
        let bad = || IngestError::InvalidRecord(format!("query key `{s}` is not COUNTRY:DATE:KIND:QUERY"));
        let country = CountryCode::new(parts.next().ok_or_else(bad)?)?;
        let date = NaiveDate::parse_from_str(parts.next().ok_or_else(bad)?, "%Y-%m-%d")
            .map_err(|_| bad())?;
        let kind = parts.next().ok_or_else(bad)?.parse()?;
        let query = parts.next().filter(|q| !q.trim().is_empty()).ok_or_else(bad)?;
        Ok(CorpusKey {
            query: query.to_string(),
            country,
            date,
            kind,
        })
    }
}

/// All results for one key, ordered by rank.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryCorpus {
    pub key: CorpusKey,
    pub records: Vec<SearchRecord>,
}

impl QueryCorpus {
    /// Sort by rank and check the corpus invariants: nonempty, every record
    /// under `key`, ranks exactly `1..=N`.
    pub fn new(key: CorpusKey, mut records: Vec<SearchRecord>) -> Result<Self, IngestError> {
        if records.is_empty() {
            return Err(IngestError::InvalidRecord(format!("corpus {key} is empty")));
        }
        records.sort_by_key(|r| r.rank);
        for (i, r) in records.iter().enumerate() {
            if r.key() != key {
                return Err(IngestError::InvalidRecord(format!(
                    "record at rank {} belongs to {}, not {key}",
                    r.rank,
                    r.key()
                )));
            }
            if i > 0 && records[i - 1].rank == r.rank {
                return Err(IngestError::DuplicateRank {
                    key: key.to_string(),
                    rank: r.rank,
                });
            }
            if r.rank as usize != i + 1 {
                return Err(IngestError::NonContiguousRanks {
                    key: key.to_string(),
                    missing: i as u32 + 1,
                });
            }
        }
        Ok(Self { key, records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn texts(&self) -> Vec<String> {
        self.records.iter().map(SearchRecord::text).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domains() {
        assert_eq!(registrable_domain("www.bbc.co.uk"), "bbc.co.uk");
        assert_eq!(registrable_domain("news.example.com"), "example.com");
        assert_eq!(registrable_domain("example.com."), "example.com");
        assert_eq!(registrable_domain("localhost"), "localhost");
        assert_eq!(registrable_domain("10.0.0.1"), "10.0.0.1");
        assert_eq!(registrable_domain("A.B.C.NYTimes.COM"), "nytimes.com");
    }

    #[test]
    fn parse_derives_domain() {
        let line = r#"{"query":"q","country":"us","date":"2022-01-01","rank":1,"kind":"web","title":"t","snippet":"s","url":"https://www.nytimes.com/x"}"#;
        let r = SearchRecord::parse_line(line).unwrap();
        assert_eq!(r.domain, "nytimes.com");
        assert_eq!(r.country.as_str(), "US");
    }

    #[test]
    fn parse_rejects_inconsistent_domain() {
        let line = r#"{"query":"q","country":"US","date":"2022-01-01","rank":1,"kind":"web","title":"t","snippet":"s","url":"https://www.nytimes.com/x","domain":"bbc.com"}"#;
        assert!(SearchRecord::parse_line(line).is_err());
        let ok = line.replace("bbc.com", "nytimes.com");
        assert!(SearchRecord::parse_line(&ok).is_ok());
    }

    #[test]
    fn parse_rejects_bad_fields() {
        for bad in [
            r#"{"query":"q","country":"USA","date":"2022-01-01","rank":1,"kind":"web","title":"t","snippet":"s","url":"https://a.com"}"#,
            r#"{"query":"q","country":"US","date":"2022-13-01","rank":1,"kind":"web","title":"t","snippet":"s","url":"https://a.com"}"#,
            r#"{"query":"q","country":"US","date":"2022-01-01","rank":0,"kind":"web","title":"t","snippet":"s","url":"https://a.com"}"#,
            r#"{"query":"q","country":"US","date":"2022-01-01","rank":1,"kind":"image","title":"t","snippet":"s","url":"https://a.com"}"#,
            r#"{"query":"q","country":"US","date":"2022-01-01","rank":1,"kind":"web","title":"t","snippet":"s","url":"not a url"}"#,
            r#"{"query":"q","country":"US"}"#,
        ] {
            assert!(SearchRecord::parse_line(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn key_round_trip() {
        let k: CorpusKey = "us:2022-01-01:news:a:b c".parse().unwrap();
        assert_eq!(k.query, "a:b c");
        assert_eq!(k.country.as_str(), "US");
        assert_eq!(k.kind, ResultKind::News);
        assert_eq!(k.to_string(), "US:2022-01-01:news:a:b c");
        assert!("US:2022-01-01:web:".parse::<CorpusKey>().is_err());
        assert!("US:yesterday:web:q".parse::<CorpusKey>().is_err());
    }
}
