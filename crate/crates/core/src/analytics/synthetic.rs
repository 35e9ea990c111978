//! Synthetic country-day panel with known press-restriction effects.
//!
//! Press is constant within a country, and countries cluster by region, so
//! the standardized press score splits exactly into a region mean plus a
//! within-region deviation. The outcome loads on the two parts separately,
//! with the between-region loading solved so that the pooled slope equals
//! `beta_press` in sample. Region fixed effects then recover `beta_within`.

use chrono::{Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};

use super::pipeline::{Panel, PanelRow};
use super::{zscore, AnalyticsError, Region};

#[derive(Debug, Clone, PartialEq)]
pub struct PanelConfig {
    pub n_obs: usize,
    pub n_countries: usize,
    pub n_dates: usize,
    /// Pooled slope on standardized press.
    pub beta_press: f64,
    /// Slope on the within-region part of standardized press.
    pub beta_within: f64,
    pub noise_sd: f64,
    pub intercept: f64,
    pub seed: u64,
}

impl Default for PanelConfig {
    fn default() -> Self {
        Self {
            n_obs: 5000,
            n_countries: 48,
            n_dates: 30,
            beta_press: -0.28,
            beta_within: -0.17,
            noise_sd: 1.0,
            intercept: 50.0,
            seed: 0,
        }
    }
}

pub fn synthetic_panel(cfg: &PanelConfig) -> Result<Panel, AnalyticsError> {
    if cfg.n_countries < Region::ALL.len() || cfg.n_dates == 0 || cfg.n_obs < cfg.n_countries {
        return Err(AnalyticsError::InvalidInput(
            "need at least one country per region, one date and one row per country".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let unit = Normal::new(0.0, 1.0).expect("valid normal");
    let noise = Normal::new(0.0, cfg.noise_sd)
        .map_err(|e| AnalyticsError::InvalidInput(format!("noise_sd: {e}")))?;
    let volume = LogNormal::new(8.0, 1.0).expect("valid lognormal");

    // Region press levels spread from freest to most restricted.
    let n_regions = Region::ALL.len();
    let countries: Vec<(String, Region, f64, f64, f64)> = (0..cfg.n_countries)
        .map(|i| {
            let r = i % n_regions;
            let level = 20.0 + 50.0 * r as f64 / (n_regions - 1) as f64;
            let press = (level + 8.0 * unit.sample(&mut rng)).clamp(0.0, 100.0);
            let gdp = (10.0 + unit.sample(&mut rng)).exp();
            let pop = (16.0 + 1.5 * unit.sample(&mut rng)).exp();
            (format!("C{i:02}"), Region::ALL[r], press, gdp, pop)
        })
        .collect();

    let start = NaiveDate::from_ymd_opt(2022, 1, 1).expect("valid date");
    // Every country appears at least once so regions are never empty.
    let members: Vec<(usize, usize)> = (0..cfg.n_obs)
        .map(|i| {
            let c = if i < cfg.n_countries { i } else { rng.random_range(0..cfg.n_countries) };
            (c, rng.random_range(0..cfg.n_dates))
        })
        .collect();

    let press: Vec<f64> = members.iter().map(|&(c, _)| countries[c].2).collect();
    let z = zscore(&press)?;
    let mut sums = [0.0; 6];
    let mut counts = [0usize; 6];
    for (&(c, _), zi) in members.iter().zip(&z) {
        let r = countries[c].1 as usize;
        sums[r] += zi;
        counts[r] += 1;
    }
    let region_mean: Vec<f64> = members
        .iter()
        .map(|&(c, _)| {
            let r = countries[c].1 as usize;
            sums[r] / counts[r] as f64
        })
        .collect();
    let within: Vec<f64> = z.iter().zip(&region_mean).map(|(zi, m)| zi - m).collect();
    let ss_between: f64 = region_mean.iter().map(|m| m * m).sum();
    let ss_within: f64 = within.iter().map(|u| u * u).sum();
    if ss_between <= 0.0 {
        return Err(AnalyticsError::InvalidInput("regions share one press level".into()));
    }
    // within and between parts are orthogonal, so the pooled slope is the
    // variance-weighted mix of the two loadings
    let beta_between =
        (cfg.beta_press * (ss_between + ss_within) - cfg.beta_within * ss_within) / ss_between;

    let rows = members
        .iter()
        .enumerate()
        .map(|(i, &(c, d))| {
            let (name, region, p, gdp, pop) = &countries[c];
            PanelRow {
                country: name.clone(),
                region: *region,
                date: start + Duration::days(d as i64),
                completeness: cfg.intercept
                    + cfg.beta_within * within[i]
                    + beta_between * region_mean[i]
                    + noise.sample(&mut rng),
                press_restriction: *p,
                search_volume: volume.sample(&mut rng),
                gdp_per_capita: *gdp,
                population: *pop,
            }
        })
        .collect();
    Ok(Panel { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::{ols_fit, Design, OlsOptions};
    use crate::analytics::pipeline::PRESS;

    #[test]
    fn deterministic_for_seed() {
        let cfg = PanelConfig { n_obs: 300, ..Default::default() };
        assert_eq!(synthetic_panel(&cfg).unwrap(), synthetic_panel(&cfg).unwrap());
    }

    #[test]
    fn noiseless_pooled_slope_is_exact() {
        let cfg = PanelConfig { noise_sd: 1e-300, n_obs: 1000, ..Default::default() };
        let panel = synthetic_panel(&cfg).unwrap();
        let d = Design::new().with(PRESS, panel.rows.iter().map(|r| r.press_restriction).collect()).unwrap();
        let fit = ols_fit(&d, &panel.outcome(), &OlsOptions::default().standardizing([PRESS])).unwrap();
        assert!((fit.term(PRESS).unwrap().estimate + 0.28).abs() < 1e-8);
        let fe = OlsOptions::default().standardizing([PRESS]).with_fixed_effect(panel.region_effect());
        let fit = ols_fit(&d, &panel.outcome(), &fe).unwrap();
        assert!((fit.term(PRESS).unwrap().estimate + 0.17).abs() < 1e-8);
    }

    #[test]
    fn rejects_tiny_config() {
        assert!(synthetic_panel(&PanelConfig { n_countries: 3, ..Default::default() }).is_err());
    }
}
