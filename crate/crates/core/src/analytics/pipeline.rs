//! Store corpora to scored queries, and scored queries plus country
//! covariates to the press-restriction panel and its five nested fits.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use super::{
    first_page_completeness, ols_fit, AnalyticsError, Design, FixedEffect, OlsOptions, Region,
    RegressionFit, ScoredQuery, DEFAULT_PAGE_SIZE,
};
use crate::completeness::{build_corpus_vector, completeness_curve, CompletenessCurve};
use crate::embedding::Embedder;
use crate::ingestion::{weights_for_corpus, CorpusStore, DomainWeights, QueryCorpus, DEFAULT_WEIGHT_FLOOR};

pub const OUTCOME: &str = "completeness";
pub const PRESS: &str = "press_restriction";
pub const VOLUME: &str = "search_volume";
pub const GDP: &str = "gdp_per_capita";
pub const POPULATION: &str = "population";

/// Completeness curve of one stored corpus; uniform weights unless domain
/// weights are given.
pub fn corpus_curve(
    corpus: &QueryCorpus,
    embedder: &dyn Embedder,
    weights: Option<&DomainWeights>,
) -> Result<CompletenessCurve, AnalyticsError> {
    let texts = corpus.texts();
    let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
    let vectors = embedder.embed_batch(&refs)?;
    let w = weights.map(|dw| weights_for_corpus(corpus, dw, DEFAULT_WEIGHT_FLOOR));
    let cv = build_corpus_vector(&vectors, w.as_deref())?;
    Ok(completeness_curve(&vectors, &cv)?)
}

/// Score every corpus in the store. Search volume is the corpus size.
pub fn score_store(
    store: &CorpusStore,
    embedder: &dyn Embedder,
    weights: Option<&DomainWeights>,
    covariates: Option<&Covariates>,
) -> Result<Vec<ScoredQuery>, AnalyticsError> {
    let mut out = Vec::new();
    for corpus in store.load_all()? {
        let country = corpus.key.country.as_str();
        let region = covariates
            .and_then(|c| c.region_of(country))
            .or_else(|| Region::of_country(country))
            .ok_or_else(|| AnalyticsError::UnknownRegion(country.to_string()))?;
        let curve = corpus_curve(&corpus, embedder, weights)?;
        out.push(ScoredQuery {
            first_page: first_page_completeness(&curve, DEFAULT_PAGE_SIZE),
            search_volume: corpus.len() as u64,
            key: corpus.key,
            region,
            curve,
        });
    }
    if out.is_empty() {
        return Err(AnalyticsError::EmptyInput);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateRow {
    pub country: String,
    pub year: i32,
    pub press_restriction: f64,
    pub gdp_per_capita: f64,
    pub population: f64,
    #[serde(default)]
    pub region: Option<Region>,
}

/// Country-year covariates keyed by (country, year).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Covariates {
    rows: BTreeMap<(String, i32), CovariateRow>,
}

impl Covariates {
    pub fn from_rows(rows: Vec<CovariateRow>) -> Result<Self, AnalyticsError> {
        let mut map = BTreeMap::new();
        for mut r in rows {
            r.country = r.country.trim().to_ascii_uppercase();
            for (name, v) in [(PRESS, r.press_restriction), (GDP, r.gdp_per_capita), (POPULATION, r.population)] {
                if !v.is_finite() {
                    return Err(AnalyticsError::InvalidInput(format!("{name} for {} is not finite", r.country)));
                }
            }
            if !(0.0..=100.0).contains(&r.press_restriction) {
                return Err(AnalyticsError::InvalidInput(format!(
                    "press restriction {} for {} is outside 0-100",
                    r.press_restriction, r.country
                )));
            }
            let key = (r.country.clone(), r.year);
            if map.insert(key, r).is_some() {
                return Err(AnalyticsError::InvalidInput("duplicate country-year row".into()));
            }
        }
        Ok(Self { rows: map })
    }

    /// Columns: country, year, press_restriction, gdp_per_capita,
    /// population, and an optional region.
    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self, AnalyticsError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let rows = rdr
            .deserialize()
            .collect::<Result<Vec<CovariateRow>, _>>()
            .map_err(|e| AnalyticsError::InvalidInput(format!("covariates: {e}")))?;
        Self::from_rows(rows)
    }

    pub fn load(path: &Path) -> Result<Self, AnalyticsError> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    /// Row for the search year, else the latest earlier year.
    pub fn lookup(&self, country: &str, year: i32) -> Option<&CovariateRow> {
        self.rows
            .range((country.to_string(), i32::MIN)..=(country.to_string(), year))
            .next_back()
            .map(|(_, r)| r)
    }

    pub fn region_of(&self, country: &str) -> Option<Region> {
        self.rows
            .range((country.to_string(), i32::MIN)..=(country.to_string(), i32::MAX))
            .find_map(|(_, r)| r.region)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// One date-country-query observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelRow {
    pub country: String,
    pub region: Region,
    pub date: NaiveDate,
    pub completeness: f64,
    pub press_restriction: f64,
    pub search_volume: f64,
    pub gdp_per_capita: f64,
    pub population: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    pub rows: Vec<PanelRow>,
}

impl Panel {
    pub fn from_scored(scored: &[ScoredQuery], covariates: &Covariates) -> Result<Self, AnalyticsError> {
        let rows = scored
            .iter()
            .map(|q| {
                let country = q.key.country.as_str();
                let cov = covariates.lookup(country, q.key.date.year()).ok_or_else(|| {
                    AnalyticsError::InvalidInput(format!(
                        "no covariates for {country} in or before {}",
                        q.key.date.year()
                    ))
                })?;
                Ok(PanelRow {
                    country: country.to_string(),
                    region: q.region,
                    date: q.key.date,
                    completeness: q.first_page,
                    press_restriction: cov.press_restriction,
                    search_volume: q.search_volume as f64,
                    gdp_per_capita: cov.gdp_per_capita,
                    population: cov.population,
                })
            })
            .collect::<Result<Vec<_>, AnalyticsError>>()?;
        Ok(Self { rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn column(&self, f: impl Fn(&PanelRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }

    pub fn outcome(&self) -> Vec<f64> {
        self.column(|r| r.completeness)
    }

    pub fn date_effect(&self) -> FixedEffect {
        FixedEffect::new("date", self.rows.iter().map(|r| r.date.to_string()).collect())
    }

    pub fn region_effect(&self) -> FixedEffect {
        FixedEffect::new("region", self.rows.iter().map(|r| r.region.to_string()).collect())
    }

    pub fn design(&self, covariates: &[&str]) -> Result<Design, AnalyticsError> {
        let mut d = Design::new();
        for &name in covariates {
            let col = match name {
                PRESS => self.column(|r| r.press_restriction),
                VOLUME => self.column(|r| r.search_volume),
                GDP => self.column(|r| r.gdp_per_capita),
                POPULATION => self.column(|r| r.population),
                other => return Err(AnalyticsError::InvalidInput(format!("unknown panel column `{other}`"))),
            };
            d.push(name, col)?;
        }
        Ok(d)
    }
}

/// Nested specifications: press; + volume; + GDP and population; + date FE;
/// + region FE. Continuous regressors are standardized.
pub fn press_models(panel: &Panel, se: &str) -> Result<Vec<RegressionFit>, AnalyticsError> {
    if panel.is_empty() {
        return Err(AnalyticsError::EmptyInput);
    }
    let y = panel.outcome();
    let specs: [(&[&str], bool, bool); 5] = [
        (&[PRESS], false, false),
        (&[PRESS, VOLUME], false, false),
        (&[PRESS, VOLUME, GDP, POPULATION], false, false),
        (&[PRESS, VOLUME, GDP, POPULATION], true, false),
        (&[PRESS, VOLUME, GDP, POPULATION], true, true),
    ];
    specs
        .iter()
        .map(|&(covs, date_fe, region_fe)| {
            let mut opts = OlsOptions {
                se: se.to_string(),
                outcome_name: OUTCOME.to_string(),
                ..OlsOptions::default()
            }
            .standardizing(covs.iter().copied());
            if date_fe {
                opts = opts.with_fixed_effect(panel.date_effect());
            }
            if region_fe {
                opts = opts.with_fixed_effect(panel.region_effect());
            }
            ols_fit(&panel.design(covs)?, &y, &opts)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSV: &str = "country,year,press_restriction,gdp_per_capita,population,region\n\
        US,2021,25.0,63000,331,\n\
        US,2022,27.0,70000,333,\n\
        ZA,2022,22.0,7000,60,south_asia\n";

    #[test]
    fn covariates_lookup_and_region_override() {
        let c = Covariates::from_csv_reader(CSV.as_bytes()).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.lookup("US", 2022).unwrap().press_restriction, 27.0);
        assert_eq!(c.lookup("US", 2023).unwrap().year, 2022);
        assert!(c.lookup("US", 2020).is_none());
        assert_eq!(c.region_of("ZA"), Some(Region::SouthAsia));
        assert_eq!(c.region_of("US"), None);
    }

    #[test]
    fn covariates_reject_out_of_range_press() {
        let bad = "country,year,press_restriction,gdp_per_capita,population\nUS,2022,140,1,1\n";
        assert!(Covariates::from_csv_reader(bad.as_bytes()).is_err());
    }
}
