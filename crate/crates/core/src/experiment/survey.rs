use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ExperimentError;

pub const RESPONSE_MIN: i32 = -3;
pub const RESPONSE_MAX: i32 = 3;

pub const AOT17: &str = "aot17";
pub const AOT7: &str = "aot7";
pub const SECS: &str = "secs";

pub const FACT_RESISTANCE: &str = "fact_resistance";
pub const DOGMATISM: &str = "dogmatism";
pub const LIBERALISM: &str = "liberalism";
pub const BELIEF_PERSONIFICATION: &str = "belief_personification";

/// Text shown for items whose wording the operator must supply.
pub const PLACEHOLDER_TEXT: &str = "(item text not configured)";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyItem {
    pub text: String,
    pub dimension: String,
    #[serde(default)]
    pub reverse_coded: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyScale {
    pub name: String,
    #[serde(default = "one")]
    pub version: u32,
    /// Unscored scales keep raw answers only.
    #[serde(default = "yes")]
    pub scored: bool,
    /// Item text still needs to be supplied by the operator.
    #[serde(default)]
    pub placeholder: bool,
    pub items: Vec<SurveyItem>,
}

fn one() -> u32 {
    1
}

fn yes() -> bool {
    true
}

const AOT17_ITEMS: [(&str, &str, bool); 17] = [
    (FACT_RESISTANCE, "One should disregard evidence that conflicts with your established beliefs.", true),
    (FACT_RESISTANCE, "It is important to persevere in your beliefs even when evidence is brought to bear against them.", true),
    (FACT_RESISTANCE, "Certain beliefs are just too important to abandon no matter how good a case can be made against them.", true),
    (FACT_RESISTANCE, "Beliefs should always be revised in response to new information or evidence.", false),
    (FACT_RESISTANCE, "People should always take into consideration evidence that goes against their beliefs.", false),
    (DOGMATISM, "I believe that loyalty to one’s ideals and principles is more important than “open-mindedness”.", true),
    (DOGMATISM, "I believe that the 'new morality' of permissiveness is no morality at all.", true),
    (DOGMATISM, "Of all the different philosophies which exist in the world there is probably only one which is correct.", true),
    (DOGMATISM, "I think there are many wrong ways, but only one right way, to almost anything.", true),
    (DOGMATISM, "I believe letting youth hear controversial speakers can only confuse and mislead them.", true),
    (DOGMATISM, "I believe we should look to our religious authorities for decisions on all moral issues.", true),
    (LIBERALISM, "I consider myself broad-minded and tolerant of other people’s lifestyles.", false),
    (LIBERALISM, "A person should always consider new possibilities.", false),
    (LIBERALISM, "I believe that the different ideas of right and wrong that people in other societies have may be valid for them.", false),
    (BELIEF_PERSONIFICATION, "There are a number of people I have come to dislike because of the things they stand for.", true),
    (BELIEF_PERSONIFICATION, "I tend to classify people as either for me or against me.", true),
    (BELIEF_PERSONIFICATION, "I feel anger whenever a person stubbornly refuses to admit they are wrong.", true),
];

impl SurveyScale {
    /// The 17-item posttest instrument in four dimensions.
    pub fn aot17() -> Self {
        Self {
            name: AOT17.into(),
            version: 1,
            scored: true,
            placeholder: false,
            items: AOT17_ITEMS
                .iter()
                .map(|&(dimension, text, reverse_coded)| SurveyItem {
                    text: text.into(),
                    dimension: dimension.into(),
                    reverse_coded,
                })
                .collect(),
        }
    }

    /// Seven-item pretest. Wording must be supplied from a scale file.
    pub fn aot7_placeholder() -> Self {
        Self::placeholder(AOT7, 7, true)
    }

    /// Five-item conservatism pretest; answers are stored, never scored.
    pub fn secs_placeholder() -> Self {
        Self::placeholder(SECS, 5, false)
    }

    fn placeholder(name: &str, n: usize, scored: bool) -> Self {
        Self {
            name: name.into(),
            version: 1,
            scored,
            placeholder: true,
            items: (0..n)
                .map(|_| SurveyItem {
                    text: PLACEHOLDER_TEXT.into(),
                    dimension: name.into(),
                    reverse_coded: false,
                })
                .collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        let scale: Self = serde_json::from_str(text)
            .map_err(|e| ExperimentError::InvalidConfig(format!("scale definition: {e}")))?;
        scale.validate()?;
        Ok(scale)
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scale serializes")
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.name.trim().is_empty() {
            return Err(ExperimentError::InvalidConfig("scale name is empty".into()));
        }
        if self.items.is_empty() {
            return Err(ExperimentError::InvalidConfig(format!("scale {} has no items", self.name)));
        }
        if let Some(i) = self.items.iter().position(|it| it.dimension.trim().is_empty()) {
            return Err(ExperimentError::InvalidConfig(format!("item {i} of {} has no dimension", self.name)));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Dimensions in order of first appearance.
    pub fn dimensions(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for it in &self.items {
            if !out.contains(&it.dimension.as_str()) {
                out.push(&it.dimension);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyResponse {
    pub participant_id: String,
    pub scale: String,
    pub answers: Vec<i32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyScore {
    pub overall: f64,
    pub by_dimension: BTreeMap<String, f64>,
}

/// Length and range check. Errors name the first offending item.
pub fn validate_answers(answers: &[i32], scale: &SurveyScale) -> Result<(), ExperimentError> {
    if answers.len() != scale.len() {
        return Err(ExperimentError::InvalidResponse {
            item: None,
            message: format!("{} answers for {} items of {}", answers.len(), scale.len(), scale.name),
        });
    }
    if let Some(i) = answers.iter().position(|a| !(RESPONSE_MIN..=RESPONSE_MAX).contains(a)) {
        return Err(ExperimentError::InvalidResponse {
            item: Some(i),
            message: format!("answer {} is outside {RESPONSE_MIN}..={RESPONSE_MAX}", answers[i]),
        });
    }
    Ok(())
}

/// Reverse-coded answers count negated; dimension and overall scores are
/// means of the effective answers.
pub fn score_survey(response: &SurveyResponse, scale: &SurveyScale) -> Result<SurveyScore, ExperimentError> {
    if response.scale != scale.name {
        return Err(ExperimentError::InvalidResponse {
            item: None,
            message: format!("response is for {}, not {}", response.scale, scale.name),
        });
    }
    if !scale.scored {
        return Err(ExperimentError::UnscoredScale(scale.name.clone()));
    }
    validate_answers(&response.answers, scale)?;
    let mut dims: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    let mut total = 0.0;
    for (item, &a) in scale.items.iter().zip(&response.answers) {
        let effective = if item.reverse_coded { -a } else { a } as f64;
        total += effective;
        let e = dims.entry(item.dimension.clone()).or_insert((0.0, 0));
        e.0 += effective;
        e.1 += 1;
    }
    Ok(SurveyScore {
        overall: total / scale.len() as f64,
        by_dimension: dims.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect(),
    })
}

/// Z-scores with the sample standard deviation.
pub fn standardize(values: &[f64]) -> Result<Vec<f64>, ExperimentError> {
    crate::analytics::zscore(values).map_err(|_| ExperimentError::DegenerateDistribution)
}

/// Named scales available to a deployment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScaleSet {
    scales: BTreeMap<String, SurveyScale>,
}

impl ScaleSet {
    /// AOT17, plus placeholder AOT7 and SECS definitions.
    pub fn builtin() -> Self {
        let mut set = Self::default();
        for s in [SurveyScale::aot17(), SurveyScale::aot7_placeholder(), SurveyScale::secs_placeholder()] {
            set.insert(s);
        }
        set
    }

    /// Replaces any scale of the same name.
    pub fn insert(&mut self, scale: SurveyScale) {
        self.scales.insert(scale.name.clone(), scale);
    }

    /// Load every `*.json` scale file in a directory over the built-ins.
    pub fn with_dir(mut self, dir: &Path) -> Result<Self, ExperimentError> {
        let mut paths: Vec<_> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        for p in paths {
            self.insert(SurveyScale::load(&p)?);
        }
        Ok(self)
    }

    pub fn get(&self, name: &str) -> Option<&SurveyScale> {
        self.scales.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.scales.keys().map(String::as_str)
    }
}
