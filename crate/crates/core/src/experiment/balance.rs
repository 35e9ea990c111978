use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{standardize, ExperimentError, Participant, ParticipantCovariates};

pub const AOT7_ROW: &str = "aot7_std";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceRow {
    pub covariate: String,
    pub treat_mean: f64,
    pub control_mean: f64,
    pub diff: f64,
    pub se: f64,
    pub p_value: f64,
    pub stars: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceTable {
    pub rows: Vec<BalanceRow>,
    pub n_treatment: usize,
    pub n_control: usize,
}

/// Balance-table legend: `***` p<0.01, `**` p<0.05, `*` p<0.10.
pub fn balance_stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.10 {
        "*"
    } else {
        ""
    }
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() < 2 {
        0.0
    } else {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    };
    (mean, var)
}

/// Difference in means with SE √(s²_t/n_t + s²_c/n_c) and a two-sided
/// normal p-value.
pub fn balance_row(name: &str, treated: &[f64], control: &[f64]) -> Result<BalanceRow, ExperimentError> {
    if treated.is_empty() || control.is_empty() {
        return Err(ExperimentError::EmptyArm);
    }
    let (mt, vt) = mean_var(treated);
    let (mc, vc) = mean_var(control);
    let diff = mt - mc;
    let se = (vt / treated.len() as f64 + vc / control.len() as f64).sqrt();
    let p_value = if se > 0.0 {
        let z = (diff / se).abs();
        2.0 * (1.0 - Normal::standard().cdf(z))
    } else if diff == 0.0 {
        1.0
    } else {
        0.0
    };
    Ok(BalanceRow {
        covariate: name.to_string(),
        treat_mean: mt,
        control_mean: mc,
        diff,
        se,
        p_value,
        stars: balance_stars(p_value).to_string(),
    })
}

/// One row per covariate plus the pool-standardized AOT7 pretest score.
pub fn balance_table(participants: &[Participant]) -> Result<BalanceTable, ExperimentError> {
    let (treated, control): (Vec<&Participant>, Vec<&Participant>) =
        participants.iter().partition(|p| p.arm.is_treatment());
    if treated.is_empty() || control.is_empty() {
        return Err(ExperimentError::EmptyArm);
    }
    let mut rows = Vec::new();
    for (j, name) in ParticipantCovariates::NAMES.iter().enumerate() {
        let t: Vec<f64> = treated.iter().map(|p| p.covariates.values()[j]).collect();
        let c: Vec<f64> = control.iter().map(|p| p.covariates.values()[j]).collect();
        rows.push(balance_row(name, &t, &c)?);
    }
    let raw: Vec<f64> = participants.iter().map(|p| p.aot7_pre).collect();
    let z = standardize(&raw).unwrap_or_else(|_| vec![0.0; raw.len()]);
    let (zt, zc): (Vec<(f64, bool)>, Vec<(f64, bool)>) = z
        .into_iter()
        .zip(participants.iter().map(|p| p.arm.is_treatment()))
        .partition(|(_, t)| *t);
    let zt: Vec<f64> = zt.into_iter().map(|(v, _)| v).collect();
    let zc: Vec<f64> = zc.into_iter().map(|(v, _)| v).collect();
    rows.push(balance_row(AOT7_ROW, &zt, &zc)?);
    Ok(BalanceTable {
        rows,
        n_treatment: treated.len(),
        n_control: control.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::Arm;

    fn person(id: usize, arm: Arm, age: f64, aot: f64) -> Participant {
        Participant {
            id: format!("p{id}"),
            covariates: ParticipantCovariates { age, white: (id % 2) as f64, ..Default::default() },
            arm,
            aot7_pre: aot,
        }
    }

    #[test]
    fn identical_groups_have_zero_diff() {
        let mut ps = Vec::new();
        for i in 0..10 {
            ps.push(person(i, Arm::Treatment, 20.0 + i as f64, i as f64));
            ps.push(person(i, Arm::Control, 20.0 + i as f64, i as f64));
        }
        let t = balance_table(&ps).unwrap();
        assert_eq!(t.rows.len(), 8);
        assert!(t.rows.iter().all(|r| r.diff.abs() < 1e-12));
    }

    #[test]
    fn two_point_groups_hand_se() {
        // treated {0, 2}: mean 1, s² 2; control {1, 1}: mean 1, s² 0
        let r = balance_row("x", &[0.0, 2.0], &[1.0, 1.0]).unwrap();
        assert_eq!(r.diff, 0.0);
        assert!((r.se - 1.0).abs() < 1e-12);
        // treated {1, 3}, control {0, 0, 0}: se = √(2/2 + 0) = 1
        let r = balance_row("x", &[1.0, 3.0], &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(r.diff, 2.0);
        assert!((r.se - 1.0).abs() < 1e-12);
        // control {-1, 1}: se = √(2/2 + 2/2)
        let r = balance_row("x", &[1.0, 3.0], &[-1.0, 1.0]).unwrap();
        assert!((r.se - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn legend_thresholds() {
        assert_eq!(balance_stars(0.009), "***");
        assert_eq!(balance_stars(0.04), "**");
        assert_eq!(balance_stars(0.07), "*");
        assert_eq!(balance_stars(0.2), "");
    }

    #[test]
    fn star_for_p_between_001_and_005() {
        // treated {a-1, a+1}, control {-1, 1}: se = √2, z = a/√2 = 2.2
        let a = 2.2 * 2f64.sqrt();
        let r = balance_row("x", &[a - 1.0, a + 1.0], &[-1.0, 1.0]).unwrap();
        assert!((r.se - 2f64.sqrt()).abs() < 1e-12);
        // 2(1 - Φ(2.2)) = 0.027807
        assert!((r.p_value - 0.027807).abs() < 1e-5, "{}", r.p_value);
        assert_eq!(r.stars, "**");
    }

    #[test]
    fn empty_arm() {
        let ps = vec![person(0, Arm::Control, 30.0, 0.0)];
        assert!(matches!(balance_table(&ps), Err(ExperimentError::EmptyArm)));
    }
}
