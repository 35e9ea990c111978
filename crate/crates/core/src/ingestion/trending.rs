//! Sources of daily trending queries.
//!
//! Only a fixture-backed source ships; a live source would register under
//! its own name in [`TrendingRegistry`].

use std::fs;
use std::path::PathBuf;
use std::sync::OnceLock;

use chrono::NaiveDate;

use super::{CountryCode, IngestError};
use crate::registry::Registry;

pub trait TrendingSource: Send + Sync {
    fn name(&self) -> &str;

    /// The day's trending queries for `country`, in source order.
    fn fetch(&self, country: &CountryCode, date: NaiveDate) -> Result<Vec<String>, IngestError>;
}

/// Reads `<dir>/<COUNTRY>/<YYYY-MM-DD>.txt`, one query per line. Blank lines
/// are ignored.
#[derive(Debug, Clone)]
pub struct FixtureTrending {
    dir: PathBuf,
}

impl FixtureTrending {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }
}

impl TrendingSource for FixtureTrending {
    fn name(&self) -> &str {
        "fixture"
    }

    fn fetch(&self, country: &CountryCode, date: NaiveDate) -> Result<Vec<String>, IngestError> {
        let path = self
            .dir
            .join(country.as_str())
            .join(format!("{}.txt", date.format("%Y-%m-%d")));
        if !path.is_file() {
            return Err(IngestError::NotFound(format!(
                "no trending fixture for {country} on {date}"
            )));
        }
        Ok(fs::read_to_string(&path)?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect())
    }
}

#[derive(Debug, Clone, Default)]
pub struct TrendingConfig {
    pub fixture_dir: Option<PathBuf>,
}

pub type TrendingRegistry = Registry<TrendingConfig, dyn TrendingSource, IngestError>;

pub fn builtin_trending_registry() -> TrendingRegistry {
    let mut r = TrendingRegistry::new("trending source");
    r.register("fixture", |cfg: &TrendingConfig| {
        let dir = cfg.fixture_dir.clone().ok_or_else(|| {
            IngestError::ProviderUnavailable("fixture source needs a fixture directory".into())
        })?;
        Ok(Box::new(FixtureTrending::new(dir)) as Box<dyn TrendingSource>)
    })
    .expect("fresh registry");
    r
}

pub fn build_trending_source(
    name: &str,
    config: &TrendingConfig,
) -> Result<Box<dyn TrendingSource>, IngestError> {
    static REGISTRY: OnceLock<TrendingRegistry> = OnceLock::new();
    REGISTRY
        .get_or_init(builtin_trending_registry)
        .create(name, config)?
}

pub fn fetch_trending(
    source: &dyn TrendingSource,
    country: &CountryCode,
    date: NaiveDate,
) -> Result<Vec<String>, IngestError> {
    source.fetch(country, date)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> (tempfile::TempDir, FixtureTrending) {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir_all(dir.path().join("US")).unwrap();
        fs::write(
            dir.path().join("US/2022-01-01.txt"),
            "nfl playoffs\nbetty white\n\nweather\npowerball\ncovid testing\n",
        )
        .unwrap();
        let src = FixtureTrending::new(dir.path());
        (dir, src)
    }

    #[test]
    fn reads_queries_in_file_order() {
        let (_dir, src) = fixture();
        let us = CountryCode::new("US").unwrap();
        let date = NaiveDate::from_ymd_opt(2022, 1, 1).unwrap();
        let q = fetch_trending(&src, &us, date).unwrap();
        assert_eq!(q, ["nfl playoffs", "betty white", "weather", "powerball", "covid testing"]);
        assert_eq!(fetch_trending(&src, &us, date).unwrap(), q);
    }

    #[test]
    fn missing_fixture_is_not_found() {
        let (_dir, src) = fixture();
        let de = CountryCode::new("DE").unwrap();
        let date = NaiveDate::from_ymd_opt(2022, 1, 1).unwrap();
        assert!(matches!(src.fetch(&de, date), Err(IngestError::NotFound(_))));
    }

    #[test]
    fn registry_builds_fixture_source() {
        let (dir, _) = fixture();
        let cfg = TrendingConfig {
            fixture_dir: Some(dir.path().to_path_buf()),
        };
        let src = build_trending_source("fixture", &cfg).unwrap();
        assert_eq!(src.name(), "fixture");
        assert!(matches!(
            build_trending_source("live-serp", &cfg),
            Err(IngestError::Registry(_))
        ));
    }
}
