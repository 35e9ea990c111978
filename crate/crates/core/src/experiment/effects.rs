use serde::{Deserialize, Serialize};

use super::{ExperimentError, OutcomeRecord, Participant, ParticipantCovariates};
use crate::analytics::{ols_fit, Design, OlsOptions, RegressionFit};

pub const TREATMENT: &str = "treatment";
pub const AOT7_PRE: &str = "aot7_pre";

pub const O1_OVERALL: &str = "o1_overall";
pub const O2_MAX_RANK: &str = "o2_max_rank";
pub const O2_N_CLICKED: &str = "o2_n_clicked";
pub const O2_MEAN_CLICK_COMPLETENESS: &str = "o2_mean_click_completeness";

/// Outcome columns, with O1 dimensions named `o1_<dimension>`.
pub fn outcome_names(dimensions: &[&str]) -> Vec<String> {
    let mut names = vec![O1_OVERALL.to_string()];
    names.extend(dimensions.iter().map(|d| format!("o1_{d}")));
    names.extend([O2_MAX_RANK, O2_N_CLICKED, O2_MEAN_CLICK_COMPLETENESS].map(String::from));
    names
}

pub fn outcome_values(outcomes: &[OutcomeRecord], name: &str) -> Result<Vec<Option<f64>>, ExperimentError> {
    let pick: Box<dyn Fn(&OutcomeRecord) -> Option<f64>> = match name {
        O1_OVERALL => Box::new(|r| r.o1_overall),
        O2_MAX_RANK => Box::new(|r| Some(r.o2_max_rank as f64)),
        O2_N_CLICKED => Box::new(|r| Some(r.o2_n_clicked as f64)),
        O2_MEAN_CLICK_COMPLETENESS => Box::new(|r| r.o2_mean_click_completeness),
        other => match other.strip_prefix("o1_") {
            Some(dim) => {
                let dim = dim.to_string();
                Box::new(move |r| r.o1_dimensions.get(&dim).copied())
            }
            None => return Err(ExperimentError::InvalidConfig(format!("unknown outcome `{other}`"))),
        },
    };
    Ok(outcomes.iter().map(pick).collect())
}

/// Regress an outcome on the treatment indicator, optionally with the
/// pretest covariates as controls. Missing outcomes are dropped listwise;
/// controls constant over the kept rows are left out.
pub fn estimate_effect(
    outcome_name: &str,
    values: &[Option<f64>],
    participants: &[Participant],
    controls: bool,
    se: &str,
) -> Result<RegressionFit, ExperimentError> {
    if values.len() != participants.len() {
        return Err(ExperimentError::InvalidConfig(format!(
            "{} outcome values for {} participants",
            values.len(),
            participants.len()
        )));
    }
    let kept: Vec<(f64, &Participant)> = values
        .iter()
        .zip(participants)
        .filter_map(|(v, p)| v.map(|v| (v, p)))
        .collect();
    let treated = kept.iter().filter(|(_, p)| p.arm.is_treatment()).count();
    let control = kept.len() - treated;
    if treated < 2 || control < 2 {
        return Err(ExperimentError::TooFewPerArm { treatment: treated, control });
    }
    let y: Vec<f64> = kept.iter().map(|(v, _)| *v).collect();
    let mut design = Design::new().with(TREATMENT, kept.iter().map(|(_, p)| p.arm.indicator()).collect())?;
    if controls {
        let mut columns: Vec<(&str, Vec<f64>)> = ParticipantCovariates::NAMES
            .iter()
            .enumerate()
            .map(|(j, name)| (*name, kept.iter().map(|(_, p)| p.covariates.values()[j]).collect()))
            .collect();
        columns.push((AOT7_PRE, kept.iter().map(|(_, p)| p.aot7_pre).collect()));
        for (name, col) in columns {
            if col.iter().any(|x| *x != col[0]) {
                design.push(name, col)?;
            }
        }
    }
    let opts = OlsOptions {
        se: se.to_string(),
        outcome_name: outcome_name.to_string(),
        ..OlsOptions::default()
    };
    Ok(ols_fit(&design, &y, &opts)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectEstimate {
    pub outcome: String,
    pub controls: bool,
    pub estimate: f64,
    pub std_error: f64,
    pub p_value: f64,
    pub n_obs: usize,
}

impl EffectEstimate {
    pub fn from_fit(fit: &RegressionFit, controls: bool) -> Self {
        let t = fit.term(TREATMENT).expect("treatment term present");
        Self {
            outcome: fit.outcome.clone(),
            controls,
            estimate: t.estimate,
            std_error: t.std_error,
            p_value: t.p_value,
            n_obs: fit.n_obs,
        }
    }
}

/// Every outcome, without and then with controls.
pub fn estimate_effects(
    outcomes: &[OutcomeRecord],
    participants: &[Participant],
    dimensions: &[&str],
    se: &str,
) -> Result<Vec<EffectEstimate>, ExperimentError> {
    let mut out = Vec::new();
    for name in outcome_names(dimensions) {
        let values = outcome_values(outcomes, &name)?;
        for controls in [false, true] {
            let fit = estimate_effect(&name, &values, participants, controls, se)?;
            out.push(EffectEstimate::from_fit(&fit, controls));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::Arm;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn people(n: usize, rng: &mut ChaCha8Rng) -> Vec<Participant> {
        (0..n)
            .map(|i| Participant {
                id: format!("p{i}"),
                covariates: ParticipantCovariates {
                    age: rng.random_range(18.0..70.0),
                    female: rng.random_range(0..2) as f64,
                    ..Default::default()
                },
                arm: if i % 2 == 0 { Arm::Treatment } else { Arm::Control },
                aot7_pre: rng.random_range(-3.0..3.0),
            })
            .collect()
    }

    #[test]
    fn identical_outcomes_zero_effect() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ps = people(40, &mut rng);
        // same value sequence within each arm
        let vals: Vec<Option<f64>> = (0..40).map(|i| Some((i / 2) as f64)).collect();
        let fit = estimate_effect("y", &vals, &ps, false, "classical").unwrap();
        assert!(fit.term(TREATMENT).unwrap().estimate.abs() < 1e-8);
    }

    #[test]
    fn planted_half_sd() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ps = people(1000, &mut rng);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let vals: Vec<Option<f64>> = ps
            .iter()
            .map(|p| Some(0.5 * p.arm.indicator() + noise.sample(&mut rng)))
            .collect();
        let t = estimate_effect("y", &vals, &ps, true, "classical").unwrap();
        let b = t.term(TREATMENT).unwrap();
        assert!((b.estimate - 0.5).abs() < 3.0 * b.std_error);
    }

    #[test]
    fn orthogonal_covariate_barely_moves_estimate() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut ps = people(400, &mut rng);
        // urban alternates within each arm, so it is exactly orthogonal
        for (i, p) in ps.iter_mut().enumerate() {
            p.covariates.urban = ((i / 2) % 2) as f64;
        }
        let noise = Normal::new(0.0, 1.0).unwrap();
        let vals: Vec<Option<f64>> = ps
            .iter()
            .map(|p| Some(0.3 * p.arm.indicator() + 0.8 * p.covariates.urban + noise.sample(&mut rng)))
            .collect();
        let bare = Design::new().with(TREATMENT, ps.iter().map(|p| p.arm.indicator()).collect()).unwrap();
        let y: Vec<f64> = vals.iter().map(|v| v.unwrap()).collect();
        let b0 = ols_fit(&bare, &y, &OlsOptions::default()).unwrap().term(TREATMENT).unwrap().estimate;
        let with = bare.with("urban", ps.iter().map(|p| p.covariates.urban).collect()).unwrap();
        let b1 = ols_fit(&with, &y, &OlsOptions::default()).unwrap().term(TREATMENT).unwrap().estimate;
        assert!((b0 - b1).abs() < 0.01);
    }

    #[test]
    fn missing_dropped_and_arm_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ps = people(6, &mut rng);
        let vals = vec![Some(1.0), Some(2.0), Some(3.0), None, None, None];
        assert!(matches!(
            estimate_effect("y", &vals, &ps, false, "classical"),
            Err(ExperimentError::TooFewPerArm { treatment: 2, control: 1 })
        ));
    }
}
