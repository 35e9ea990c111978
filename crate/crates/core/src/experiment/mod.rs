//! Randomized experiment machinery: arm assignment, survey scoring,
//! balance checks, click outcomes, effect estimation and simulated agents.

mod balance;
mod effects;
mod export;
mod outcomes;
mod participant;
pub mod simulate;
mod survey;

use thiserror::Error;

use crate::analytics::AnalyticsError;

pub use balance::{balance_row, balance_stars, balance_table, BalanceRow, BalanceTable, AOT7_ROW};
pub use effects::{
    estimate_effect, estimate_effects, outcome_names, outcome_values, EffectEstimate, AOT7_PRE,
    O1_OVERALL, O2_MAX_RANK, O2_MEAN_CLICK_COMPLETENESS, O2_N_CLICKED, TREATMENT,
};
pub use export::{clicks_csv, effects_csv, outcomes_csv, participants_csv, write_exports};
pub use outcomes::{compute_o2, compute_outcomes, ClickEvent, OutcomeRecord, O2};
pub use participant::{arm_for, Arm, ArmAssigner, Participant, ParticipantCovariates};
pub use simulate::{simulate_agents, SimulatedData, SimulationConfig};
pub use survey::{
    score_survey, standardize, validate_answers, ScaleSet, SurveyItem, SurveyResponse,
    SurveyScale, SurveyScore, AOT17, AOT7, BELIEF_PERSONIFICATION, DOGMATISM, FACT_RESISTANCE,
    LIBERALISM, PLACEHOLDER_TEXT, RESPONSE_MAX, RESPONSE_MIN, SECS,
};

/// Search topics participants are asked about.
pub const TOPICS: [&str; 5] = [
    "Patriotism in my country today",
    "Openness to immigration",
    "Abortion and its legal status",
    "Traditional values in society today",
    "Laws around gun ownership",
];

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid response{}: {message}", item.map(|i| format!(" at item {i}")).unwrap_or_default())]
    InvalidResponse { item: Option<usize>, message: String },
    #[error("scale {0} is not scored")]
    UnscoredScale(String),
    #[error("values have zero variance")]
    DegenerateDistribution,
    #[error("an arm has no participants")]
    EmptyArm,
    #[error("need at least 2 per arm, have {treatment} treated and {control} control")]
    TooFewPerArm { treatment: usize, control: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("export failed: {0}")]
    Export(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
}

impl From<csv::Error> for ExperimentError {
    fn from(e: csv::Error) -> Self {
        ExperimentError::Export(e.to_string())
    }
}

/// Outcomes (O1 standardized) and effects for a simulated run.
pub fn analyze_simulation(
    data: &SimulatedData,
    se: &str,
) -> Result<(Vec<OutcomeRecord>, Vec<EffectEstimate>), ExperimentError> {
    let scale = SurveyScale::aot17();
    let outcomes = compute_outcomes(&data.participants, &data.posttest, &data.clicks, &scale, true)?;
    let effects = estimate_effects(&outcomes, &data.participants, &scale.dimensions(), se)?;
    Ok((outcomes, effects))
}
