use std::path::Path;

use super::{ClickEvent, EffectEstimate, ExperimentError, OutcomeRecord, Participant, ParticipantCovariates};

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String, ExperimentError> {
    let bytes = w.into_inner().map_err(|e| ExperimentError::Export(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn participants_csv(participants: &[Participant]) -> Result<String, ExperimentError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["id", "arm"];
    header.extend(ParticipantCovariates::NAMES);
    header.push("aot7_pre");
    w.write_record(&header)?;
    for p in participants {
        let mut row = vec![p.id.clone(), p.arm.to_string()];
        row.extend(p.covariates.values().iter().map(|v| v.to_string()));
        row.push(p.aot7_pre.to_string());
        w.write_record(&row)?;
    }
    finish(w)
}

pub fn clicks_csv(clicks: &[ClickEvent]) -> Result<String, ExperimentError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["participant_id", "topic", "query", "rank_clicked", "completeness_of_result", "timestamp"])?;
    for c in clicks {
        w.write_record([
            c.participant_id.clone(),
            c.topic.clone(),
            c.query.clone(),
            c.rank_clicked.to_string(),
            c.completeness_of_result.to_string(),
            c.timestamp.to_rfc3339(),
        ])?;
    }
    finish(w)
}

/// Missing values are written as empty cells.
pub fn outcomes_csv(outcomes: &[OutcomeRecord], dimensions: &[&str]) -> Result<String, ExperimentError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["participant_id".to_string(), "o1_overall".to_string()];
    header.extend(dimensions.iter().map(|d| format!("o1_{d}")));
    header.extend(["o2_max_rank", "o2_n_clicked", "o2_mean_click_completeness"].map(String::from));
    w.write_record(&header)?;
    for o in outcomes {
        let mut row = vec![o.participant_id.clone(), opt(o.o1_overall)];
        row.extend(dimensions.iter().map(|d| opt(o.o1_dimensions.get(*d).copied())));
        row.extend([
            o.o2_max_rank.to_string(),
            o.o2_n_clicked.to_string(),
            opt(o.o2_mean_click_completeness),
        ]);
        w.write_record(&row)?;
    }
    finish(w)
}

pub fn effects_csv(effects: &[EffectEstimate]) -> Result<String, ExperimentError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["outcome", "controls", "estimate", "std_error", "p_value", "n_obs"])?;
    for e in effects {
        w.write_record([
            e.outcome.clone(),
            e.controls.to_string(),
            e.estimate.to_string(),
            e.std_error.to_string(),
            e.p_value.to_string(),
            e.n_obs.to_string(),
        ])?;
    }
    finish(w)
}

/// Write participants.csv, clicks.csv, outcomes.csv and effects.csv.
pub fn write_exports(
    dir: &Path,
    participants: &[Participant],
    clicks: &[ClickEvent],
    outcomes: &[OutcomeRecord],
    dimensions: &[&str],
    effects: &[EffectEstimate],
) -> Result<(), ExperimentError> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("participants.csv"), participants_csv(participants)?)?;
    std::fs::write(dir.join("clicks.csv"), clicks_csv(clicks)?)?;
    std::fs::write(dir.join("outcomes.csv"), outcomes_csv(outcomes, dimensions)?)?;
    std::fs::write(dir.join("effects.csv"), effects_csv(effects)?)?;
    Ok(())
}
