use std::collections::{BTreeMap, HashMap};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{score_survey, standardize, ExperimentError, Participant, SurveyResponse, SurveyScale};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClickEvent {
    pub participant_id: String,
    pub topic: String,
    pub query: String,
    pub rank_clicked: u32,
    /// Reporting scale, 0-100.
    pub completeness_of_result: f64,
    pub timestamp: DateTime<Utc>,
}

/// Click-behaviour outcome for one participant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct O2 {
    pub max_rank: u32,
    pub n_clicked: usize,
    /// Missing when nothing was clicked.
    pub mean_click_completeness: Option<f64>,
}

pub fn compute_o2<'a, I>(clicks: I) -> O2
where
    I: IntoIterator<Item = &'a ClickEvent>,
{
    let mut max_rank = 0;
    let mut n = 0;
    let mut sum = 0.0;
    for c in clicks {
        max_rank = max_rank.max(c.rank_clicked);
        n += 1;
        sum += c.completeness_of_result;
    }
    O2 {
        max_rank,
        n_clicked: n,
        mean_click_completeness: (n > 0).then(|| sum / n as f64),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub participant_id: String,
    /// Missing when no posttest was submitted.
    pub o1_overall: Option<f64>,
    pub o1_dimensions: BTreeMap<String, f64>,
    pub o2_max_rank: u32,
    pub o2_n_clicked: usize,
    pub o2_mean_click_completeness: Option<f64>,
}

/// Outcomes in participant order. With `standardize_o1`, the overall and
/// dimension scores are z-scored across participants who have them.
pub fn compute_outcomes(
    participants: &[Participant],
    posttest: &[SurveyResponse],
    clicks: &[ClickEvent],
    scale: &SurveyScale,
    standardize_o1: bool,
) -> Result<Vec<OutcomeRecord>, ExperimentError> {
    let mut by_id: HashMap<&str, Vec<&ClickEvent>> = HashMap::new();
    for c in clicks {
        by_id.entry(c.participant_id.as_str()).or_default().push(c);
    }
    let responses: HashMap<&str, &SurveyResponse> = posttest
        .iter()
        .filter(|r| r.scale == scale.name)
        .map(|r| (r.participant_id.as_str(), r))
        .collect();

    let mut out = Vec::with_capacity(participants.len());
    for p in participants {
        let o2 = compute_o2(by_id.get(p.id.as_str()).into_iter().flatten().copied());
        let score = responses.get(p.id.as_str()).map(|r| score_survey(r, scale)).transpose()?;
        out.push(OutcomeRecord {
            participant_id: p.id.clone(),
            o1_overall: score.as_ref().map(|s| s.overall),
            o1_dimensions: score.map(|s| s.by_dimension).unwrap_or_default(),
            o2_max_rank: o2.max_rank,
            o2_n_clicked: o2.n_clicked,
            o2_mean_click_completeness: o2.mean_click_completeness,
        });
    }
    if standardize_o1 {
        standardize_present(&mut out, |r| r.o1_overall.as_mut())?;
        for dim in scale.dimensions() {
            standardize_present(&mut out, |r| r.o1_dimensions.get_mut(dim))?;
        }
    }
    Ok(out)
}

fn standardize_present(
    records: &mut [OutcomeRecord],
    mut field: impl FnMut(&mut OutcomeRecord) -> Option<&mut f64>,
) -> Result<(), ExperimentError> {
    let values: Vec<f64> = records.iter_mut().filter_map(|r| field(r).map(|v| *v)).collect();
    if values.is_empty() {
        return Ok(());
    }
    let mut z = standardize(&values)?.into_iter();
    for r in records.iter_mut() {
        if let Some(v) = field(r) {
            *v = z.next().expect("one z-score per value");
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{Arm, ParticipantCovariates, AOT17};

    fn click(id: &str, rank: u32, completeness: f64) -> ClickEvent {
        ClickEvent {
            participant_id: id.into(),
            topic: "t".into(),
            query: "q".into(),
            rank_clicked: rank,
            completeness_of_result: completeness,
            timestamp: DateTime::from_timestamp(0, 0).unwrap(),
        }
    }

    #[test]
    fn o2_examples() {
        let cs = [click("a", 1, 0.2), click("a", 3, 0.4), click("a", 7, 0.3)];
        let o = compute_o2(&cs);
        assert_eq!((o.max_rank, o.n_clicked), (7, 3));
        let o = compute_o2(&cs[..2]);
        assert!((o.mean_click_completeness.unwrap() - 0.3).abs() < 1e-12);
        let none: [ClickEvent; 0] = [];
        assert_eq!(compute_o2(&none), O2 { max_rank: 0, n_clicked: 0, mean_click_completeness: None });
    }

    #[test]
    fn o2_order_invariant() {
        let cs = vec![click("a", 4, 10.0), click("a", 9, 30.0), click("a", 2, 20.0)];
        let mut rev = cs.clone();
        rev.reverse();
        assert_eq!(compute_o2(&cs), compute_o2(&rev));
    }

    #[test]
    fn outcomes_standardized_and_missing() {
        let ps: Vec<Participant> = (0..3)
            .map(|i| Participant {
                id: format!("p{i}"),
                covariates: ParticipantCovariates::default(),
                arm: Arm::Control,
                aot7_pre: 0.0,
            })
            .collect();
        let post: Vec<SurveyResponse> = (0..2)
            .map(|i| SurveyResponse { participant_id: format!("p{i}"), scale: AOT17.into(), answers: vec![i as i32; 17] })
            .collect();
        let clicks = vec![click("p0", 5, 40.0)];
        let out = compute_outcomes(&ps, &post, &clicks, &SurveyScale::aot17(), true).unwrap();
        assert_eq!(out[0].o2_max_rank, 5);
        assert_eq!(out[2].o1_overall, None);
        assert_eq!(out[2].o2_mean_click_completeness, None);
        let a = out[0].o1_overall.unwrap();
        let b = out[1].o1_overall.unwrap();
        assert!((a + b).abs() < 1e-12 && ((b - a).abs() - 2f64.sqrt()).abs() < 1e-12);
    }
}
