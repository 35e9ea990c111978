//! Country, region and date aggregation of completeness, regression fits
//! and plot-ready exports.

mod aggregate;
mod curves;
pub mod pipeline;
pub mod regression;
mod region;
pub mod synthetic;
pub mod tables;

use thiserror::Error;

use crate::completeness::CompletenessError;
use crate::embedding::EmbedError;
use crate::ingestion::IngestError;
use crate::registry::RegistryError;

pub use aggregate::{aggregate, aggregates_csv, reaggregate, CountryDayAggregate, GroupBy, ScoredQuery};
pub use curves::{
    first_page_completeness, grid, region_curves, region_curves_csv, resample, trapezoid,
    RegionCurve, DEFAULT_PAGE_SIZE, GRID_POINTS,
};
pub use pipeline::{press_models, score_store, Covariates, CovariateRow, Panel, PanelRow};
pub use region::Region;
pub use regression::{
    builtin_covariance_registry, ols_fit, zscore, CovarianceEstimator, Design, FitContext,
    FixedEffect, OlsOptions, RegressionFit, Term, INTERCEPT,
};
pub use synthetic::{synthetic_panel, PanelConfig};
pub use tables::{export_table, parse_table_csv, stars, TableExport};

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("empty input")]
    EmptyInput,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("design is rank deficient: `{column}` is collinear with earlier columns")]
    RankDeficient { column: String },
    #[error("{n_obs} observations cannot identify {n_params} parameters")]
    InsufficientObservations { n_obs: usize, n_params: usize },
    #[error("no region known for country {0}")]
    UnknownRegion(String),
    #[error(transparent)]
    Completeness(#[from] CompletenessError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Registry(#[from] RegistryError),
}
