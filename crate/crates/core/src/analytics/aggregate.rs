use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{AnalyticsError, Region};
use crate::completeness::CompletenessCurve;
use crate::ingestion::{CorpusKey, CountryCode};

/// One query's corpus after scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredQuery {
    pub key: CorpusKey,
    pub region: Region,
    pub curve: CompletenessCurve,
    /// First-page completeness on the 0-100 scale.
    pub first_page: f64,
    pub search_volume: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GroupBy {
    pub country: bool,
    pub region: bool,
    pub date: bool,
}

impl GroupBy {
    pub const COUNTRY: GroupBy = GroupBy { country: true, region: false, date: false };
    pub const REGION: GroupBy = GroupBy { country: false, region: true, date: false };
    pub const COUNTRY_DATE: GroupBy = GroupBy { country: true, region: false, date: true };

    /// Parse a comma-separated list such as `country,date`.
    pub fn parse(spec: &str) -> Result<Self, AnalyticsError> {
        let mut g = GroupBy::default();
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "country" => g.country = true,
                "region" => g.region = true,
                "date" => g.date = true,
                other => {
                    return Err(AnalyticsError::InvalidInput(format!("cannot group by `{other}`")))
                }
            }
        }
        Ok(g)
    }
}

/// Mean first-page completeness within a group. Fields not grouped on are
/// filled in only when every member agrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryDayAggregate {
    pub country: Option<CountryCode>,
    pub region: Option<Region>,
    pub date: Option<NaiveDate>,
    pub mean_completeness: f64,
    pub search_volume: u64,
    pub queries: usize,
}

type GroupKey = (Option<CountryCode>, Option<Region>, Option<NaiveDate>);

struct Member<'a> {
    country: Option<&'a CountryCode>,
    region: Option<Region>,
    date: Option<NaiveDate>,
    value: f64,
    weight: usize,
    volume: u64,
}

fn uniform<T: PartialEq + Clone>(values: impl Iterator<Item = Option<T>>) -> Option<T> {
    let mut first: Option<Option<T>> = None;
    for v in values {
        match &first {
            None => first = Some(v),
            Some(f) if *f != v => return None,
            _ => {}
        }
    }
    first.flatten()
}

fn group(members: Vec<Member<'_>>, by: GroupBy) -> Vec<CountryDayAggregate> {
    let mut groups: BTreeMap<GroupKey, Vec<Member<'_>>> = BTreeMap::new();
    for m in members {
        let key = (
            m.country.filter(|_| by.country).cloned(),
            m.region.filter(|_| by.region),
            m.date.filter(|_| by.date),
        );
        groups.entry(key).or_default().push(m);
    }
    groups
        .into_values()
        .map(|ms| {
            let queries: usize = ms.iter().map(|m| m.weight).sum();
            let weighted: f64 = ms.iter().map(|m| m.value * m.weight as f64).sum();
            CountryDayAggregate {
                country: uniform(ms.iter().map(|m| m.country.cloned())),
                region: uniform(ms.iter().map(|m| m.region)),
                date: uniform(ms.iter().map(|m| m.date)),
                mean_completeness: weighted / queries as f64,
                search_volume: ms.iter().map(|m| m.volume).sum(),
                queries,
            }
        })
        .collect()
}

/// Mean of per-query first-page completeness per group; volumes summed.
pub fn aggregate(
    items: &[ScoredQuery],
    by: GroupBy,
) -> Result<Vec<CountryDayAggregate>, AnalyticsError> {
    if items.is_empty() {
        return Err(AnalyticsError::EmptyInput);
    }
    if let Some(bad) = items.iter().find(|q| !(0.0..=100.0).contains(&q.first_page)) {
        return Err(AnalyticsError::InvalidInput(format!(
            "first-page completeness {} for {} is outside 0-100",
            bad.first_page, bad.key
        )));
    }
    let members = items
        .iter()
        .map(|q| Member {
            country: Some(&q.key.country),
            region: Some(q.region),
            date: Some(q.key.date),
            value: q.first_page,
            weight: 1,
            volume: q.search_volume,
        })
        .collect();
    Ok(group(members, by))
}

/// Re-group existing aggregates, weighting each by its query count. Every
/// input must carry the fields being grouped on.
pub fn reaggregate(
    aggregates: &[CountryDayAggregate],
    by: GroupBy,
) -> Result<Vec<CountryDayAggregate>, AnalyticsError> {
    if aggregates.is_empty() {
        return Err(AnalyticsError::EmptyInput);
    }
    let missing = aggregates.iter().any(|a| {
        (by.country && a.country.is_none())
            || (by.region && a.region.is_none())
            || (by.date && a.date.is_none())
    });
    if missing {
        return Err(AnalyticsError::InvalidInput(
            "aggregate lacks a field required for regrouping".into(),
        ));
    }
    let members = aggregates
        .iter()
        .map(|a| Member {
            country: a.country.as_ref(),
            region: a.region,
            date: a.date,
            value: a.mean_completeness,
            weight: a.queries,
            volume: a.search_volume,
        })
        .collect();
    Ok(group(members, by))
}

pub fn aggregates_csv(aggregates: &[CountryDayAggregate]) -> Result<String, AnalyticsError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| AnalyticsError::InvalidInput(e.to_string());
    w.write_record(["country", "region", "date", "mean_completeness", "search_volume", "queries"])
        .map_err(err)?;
    for a in aggregates {
        w.write_record([
            a.country.as_ref().map(|c| c.to_string()).unwrap_or_default(),
            a.region.map(|r| r.to_string()).unwrap_or_default(),
            a.date.map(|d| d.to_string()).unwrap_or_default(),
            a.mean_completeness.to_string(),
            a.search_volume.to_string(),
            a.queries.to_string(),
        ])
        .map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| AnalyticsError::InvalidInput(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("utf-8"))
}
