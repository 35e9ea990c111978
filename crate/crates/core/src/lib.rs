pub mod embedding;
pub mod registry;
pub mod completeness;
pub mod ingestion;
pub mod analytics;
pub mod experiment;
