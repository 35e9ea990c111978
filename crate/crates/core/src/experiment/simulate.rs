//! Simulated participants for checking the outcome and estimation code
//! against known effects.
//!
//! Click ranks follow a truncated power law. Treated agents add a rank shift
//! rounded stochastically per agent, and the base support is cut short so
//! shifted ranks stay within `max_rank`; the expected furthest-rank gap is
//! then exactly the shift. Survey answers are stochastic roundings of a
//! latent value onto the six answer points, so expected scores are linear
//! in the latent shift.

use std::sync::OnceLock;

use chrono::{DateTime, Duration, Utc};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use super::{
    arm_for, Arm, ClickEvent, ExperimentError, Participant, ParticipantCovariates, SurveyResponse,
    SurveyScale, AOT17, AOT7, FACT_RESISTANCE, TOPICS,
};

/// Answer points of the six-point scale.
pub const ANSWER_POINTS: [i32; 6] = [-3, -2, -1, 1, 2, 3];

const LATENT_SD: f64 = 0.7;
const LATENT_CAP: f64 = 1.5;
const ITEM_SPREAD: f64 = 1.0;
const MAX_SPLIT_ATTEMPTS: u64 = 200_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub n_agents: usize,
    /// Exact (treatment, control) sizes, found by searching assignment seeds.
    pub split: Option<(usize, usize)>,
    pub rank_exponent: f64,
    pub max_rank: u32,
    pub rank_shift: f64,
    pub clicks_per_topic: (usize, usize),
    pub click_completeness_mean: f64,
    pub click_completeness_sd: f64,
    /// Added to the completeness of treated agents' clicks, in points.
    pub completeness_preference: f64,
    /// Shift of the fact-resistance score for treated agents, in SD units.
    pub fact_resistance_shift_sd: f64,
    pub seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            n_agents: 876,
            split: Some((434, 442)),
            rank_exponent: 1.0,
            max_rank: 100,
            rank_shift: 6.14,
            clicks_per_topic: (1, 3),
            click_completeness_mean: 45.0,
            click_completeness_sd: 12.0,
            completeness_preference: 7.6,
            fact_resistance_shift_sd: -0.212,
            seed: 0,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::InvalidConfig(m.to_string()));
        if self.n_agents < 4 {
            return bad("need at least 4 agents");
        }
        if let Some((t, c)) = self.split {
            if t + c != self.n_agents || t < 2 || c < 2 {
                return bad("split must sum to n_agents with at least 2 per arm");
            }
        }
        if !self.rank_exponent.is_finite() || self.rank_exponent < 0.0 {
            return bad("rank_exponent must be finite and nonnegative");
        }
        if self.max_rank < 2 {
            return bad("max_rank must be at least 2");
        }
        if !self.rank_shift.is_finite() || self.rank_shift < 0.0 || self.rank_shift.ceil() >= self.max_rank as f64 {
            return bad("rank_shift must lie in [0, max_rank - 1)");
        }
        let (lo, hi) = self.clicks_per_topic;
        if lo > hi {
            return bad("clicks_per_topic is an empty range");
        }
        let finite = [self.click_completeness_mean, self.click_completeness_sd, self.completeness_preference];
        if finite.iter().any(|v| !v.is_finite()) || self.click_completeness_sd < 0.0 {
            return bad("click completeness parameters must be finite with sd >= 0");
        }
        if !self.fact_resistance_shift_sd.is_finite() || self.fact_resistance_shift_sd.abs() > 1.0 {
            return bad("fact_resistance_shift_sd must lie in [-1, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedData {
    pub participants: Vec<Participant>,
    pub clicks: Vec<ClickEvent>,
    pub pretest: Vec<SurveyResponse>,
    pub posttest: Vec<SurveyResponse>,
    /// Seed under which [`arm_for`] gives the participants' arms.
    pub arm_seed: u64,
}

/// Unbiased rounding of `v` onto [`ANSWER_POINTS`].
pub fn stochastic_answer(v: f64, rng: &mut impl Rng) -> i32 {
    let v = v.clamp(-3.0, 3.0);
    for w in ANSWER_POINTS.windows(2) {
        let (a, b) = (w[0] as f64, w[1] as f64);
        if v <= b {
            let p = (v - a) / (b - a);
            return if rng.random_bool(p.clamp(0.0, 1.0)) { w[1] } else { w[0] };
        }
    }
    3
}

fn latent(rng: &mut impl Rng) -> f64 {
    let n = Normal::new(0.0, LATENT_SD).expect("valid normal");
    n.sample(rng).clamp(-LATENT_CAP, LATENT_CAP)
}

/// Effective (reverse-coding applied) answers around a latent level.
fn effective_answers(level: f64, n: usize, rng: &mut impl Rng) -> Vec<i32> {
    (0..n)
        .map(|_| stochastic_answer(level + rng.random_range(-ITEM_SPREAD..ITEM_SPREAD), rng))
        .collect()
}

/// Control-group SD of the fact-resistance score, by a fixed Monte Carlo run.
pub fn fact_resistance_sd() -> f64 {
    static SD: OnceLock<f64> = OnceLock::new();
    *SD.get_or_init(|| {
        let n_items = SurveyScale::aot17().items.iter().filter(|i| i.dimension == FACT_RESISTANCE).count();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_fac7);
        let draws = 200_000;
        let scores: Vec<f64> = (0..draws)
            .map(|_| {
                let level = latent(&mut rng);
                effective_answers(level, n_items, &mut rng).iter().sum::<i32>() as f64 / n_items as f64
            })
            .collect();
        let mean = scores.iter().sum::<f64>() / draws as f64;
        (scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (draws - 1) as f64).sqrt()
    })
}

fn participant_id(i: usize) -> String {
    format!("P{i:04}")
}

/// First assignment seed, derived from `seed`, that yields the exact split.
pub fn find_split_seed(seed: u64, n: usize, treated: usize) -> Result<u64, ExperimentError> {
    let ids: Vec<String> = (0..n).map(participant_id).collect();
    let mut mix = ChaCha8Rng::seed_from_u64(seed ^ 0xa55a_a55a);
    for _ in 0..MAX_SPLIT_ATTEMPTS {
        let candidate: u64 = mix.random();
        let t = ids.iter().filter(|id| arm_for(candidate, id).is_treatment()).count();
        if t == treated {
            return Ok(candidate);
        }
    }
    Err(ExperimentError::InvalidConfig(format!("no assignment seed gives {treated} of {n} treated")))
}

fn bernoulli(rng: &mut impl Rng, p: f64) -> f64 {
    if rng.random_bool(p) { 1.0 } else { 0.0 }
}

pub fn simulate_agents(cfg: &SimulationConfig) -> Result<SimulatedData, ExperimentError> {
    cfg.validate()?;
    let arm_seed = match cfg.split {
        Some((t, _)) => find_split_seed(cfg.seed, cfg.n_agents, t)?,
        None => cfg.seed,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let aot17 = SurveyScale::aot17();
    let dims = aot17.dimensions();
    let fr_shift = cfg.fact_resistance_shift_sd * fact_resistance_sd();

    let support = cfg.max_rank - cfg.rank_shift.ceil() as u32;
    let rank_weights = WeightedIndex::new((1..=support).map(|r| (r as f64).powf(-cfg.rank_exponent)))
        .map_err(|e| ExperimentError::InvalidConfig(format!("rank distribution: {e}")))?;
    let completeness = Normal::new(cfg.click_completeness_mean, cfg.click_completeness_sd)
        .map_err(|e| ExperimentError::InvalidConfig(format!("click completeness: {e}")))?;
    let age = Normal::<f64>::new(28.3, 9.0).expect("valid normal");
    let start: DateTime<Utc> = "2023-05-01T12:00:00Z".parse().expect("valid timestamp");

    let mut data = SimulatedData {
        participants: Vec::with_capacity(cfg.n_agents),
        clicks: Vec::new(),
        pretest: Vec::with_capacity(cfg.n_agents),
        posttest: Vec::with_capacity(cfg.n_agents),
        arm_seed,
    };
    for i in 0..cfg.n_agents {
        let id = participant_id(i);
        let arm = arm_for(arm_seed, &id);
        let treated = arm == Arm::Treatment;
        let covariates = ParticipantCovariates {
            white: bernoulli(&mut rng, 0.67),
            female: bernoulli(&mut rng, 0.46),
            age: age.sample(&mut rng).clamp(18.0, 75.0).round(),
            college: bernoulli(&mut rng, 0.45),
            income_60k: bernoulli(&mut rng, 0.57),
            urban: bernoulli(&mut rng, 0.83),
            democrat: bernoulli(&mut rng, 0.56),
        };

        let pre_level = latent(&mut rng);
        let pre = effective_answers(pre_level, 7, &mut rng);
        let aot7_pre = pre.iter().sum::<i32>() as f64 / 7.0;
        data.pretest.push(SurveyResponse { participant_id: id.clone(), scale: AOT7.into(), answers: pre });

        let mut answers = Vec::with_capacity(aot17.len());
        for dim in &dims {
            let mut level = latent(&mut rng);
            if treated && *dim == FACT_RESISTANCE {
                level += fr_shift;
            }
            let items: Vec<_> = aot17.items.iter().filter(|it| it.dimension == *dim).collect();
            for (item, e) in items.iter().zip(effective_answers(level, items.len(), &mut rng)) {
                answers.push(if item.reverse_coded { -e } else { e });
            }
        }
        // scale items are grouped by dimension, so this is item order
        data.posttest.push(SurveyResponse { participant_id: id.clone(), scale: AOT17.into(), answers });

        let frac = cfg.rank_shift.fract();
        let agent_shift = if treated {
            cfg.rank_shift.floor() as u32 + u32::from(rng.random_bool(frac))
        } else {
            0
        };
        let mut k = 0;
        for topic in TOPICS {
            let n_clicks = rng.random_range(cfg.clicks_per_topic.0..=cfg.clicks_per_topic.1);
            for _ in 0..n_clicks {
                let base = rank_weights.sample(&mut rng) as u32 + 1;
                let mut c: f64 = completeness.sample(&mut rng);
                if treated {
                    c += cfg.completeness_preference;
                }
                data.clicks.push(ClickEvent {
                    participant_id: id.clone(),
                    topic: topic.to_string(),
                    query: topic.to_string(),
                    rank_clicked: base + agent_shift,
                    completeness_of_result: (c.clamp(0.0, 100.0) * 10.0).round() / 10.0,
                    timestamp: start + Duration::minutes(i as i64) + Duration::seconds(20 * k),
                });
                k += 1;
            }
        }
        data.participants.push(Participant { id, covariates, arm, aot7_pre });
    }
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stochastic_answer_is_unbiased() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for v in [-2.6, -1.0, -0.3, 0.0, 0.4, 1.7, 2.9] {
            let n = 40_000;
            let mean = (0..n).map(|_| stochastic_answer(v, &mut rng) as f64).sum::<f64>() / n as f64;
            assert!((mean - v).abs() < 0.03, "v {v} mean {mean}");
        }
        assert!((0..100).all(|_| stochastic_answer(0.0, &mut rng) != 0));
    }

    #[test]
    fn exact_split_and_determinism() {
        let cfg = SimulationConfig { seed: 3, ..Default::default() };
        let a = simulate_agents(&cfg).unwrap();
        let t = a.participants.iter().filter(|p| p.arm.is_treatment()).count();
        assert_eq!((t, a.participants.len() - t), (434, 442));
        let b = simulate_agents(&cfg).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn ranks_within_bounds() {
        let data = simulate_agents(&SimulationConfig { n_agents: 100, split: None, ..Default::default() }).unwrap();
        assert!(data.clicks.iter().all(|c| (1..=100).contains(&c.rank_clicked)));
        let per_agent = data.clicks.len() as f64 / 100.0;
        assert!((5.0..=15.0).contains(&per_agent));
    }

    #[test]
    fn invalid_configs() {
        for cfg in [
            SimulationConfig { rank_shift: -1.0, ..Default::default() },
            SimulationConfig { rank_shift: 99.5, ..Default::default() },
            SimulationConfig { split: Some((10, 10)), ..Default::default() },
            SimulationConfig { clicks_per_topic: (3, 1), ..Default::default() },
            SimulationConfig { n_agents: 2, split: None, ..Default::default() },
        ] {
            assert!(matches!(simulate_agents(&cfg), Err(ExperimentError::InvalidConfig(_))));
        }
    }
}
