//! Relevance, information completeness and the blended ranking score.
//!
//! Completeness of a result is its cosine with the weighted corpus vector
//! `C = Σ wᵢ rᵢ`. Cumulative completeness after viewing the first `n`
//! results is the cosine between `C` and the unweighted partial sum
//! `Σ_{i≤n} rᵢ`; plotting it against `n / N` gives the completeness curve,
//! whose area is taken as the mean of the `N` right-endpoint values.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{cosine_similarity, EmbedError, EmbeddingVector};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompletenessError {
    #[error("corpus has no results")]
    EmptyCorpus,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("corpus weights must contain at least one positive entry")]
    DegenerateWeights,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("lambda {0} outside [0, 1]")]
    InvalidLambda(f64),
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

/// Blend weight between completeness (1) and relevance (0).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Lambda(f64);

impl Lambda {
    pub const RELEVANCE_ONLY: Lambda = Lambda(0.0);
    pub const COMPLETENESS_ONLY: Lambda = Lambda(1.0);
    /// Granularity of the viewer-facing slider.
    pub const SLIDER_STEP: f64 = 0.05;

    pub fn new(value: f64) -> Result<Self, CompletenessError> {
        if !(0.0..=1.0).contains(&value) {
            return Err(CompletenessError::InvalidLambda(value));
        }
        Ok(Lambda(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Lambda {
    type Error = CompletenessError;
    fn try_from(v: f64) -> Result<Self, Self::Error> {
        Lambda::new(v)
    }
}

impl From<Lambda> for f64 {
    fn from(l: Lambda) -> f64 {
        l.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusVector {
    pub vector: EmbeddingVector,
    pub weights: Vec<f64>,
}

impl CorpusVector {
    pub fn n_results(&self) -> usize {
        self.weights.len()
    }

    /// Recompute `Σ wᵢ rᵢ` from `results` and compare within `tol`.
    pub fn matches(&self, results: &[EmbeddingVector], tol: f64) -> bool {
        match build_corpus_vector(results, Some(&self.weights)) {
            Ok(other) => self
                .vector
                .values()
                .iter()
                .zip(other.vector.values())
                .all(|(a, b)| (a - b).abs() <= tol),
            Err(_) => false,
        }
    }
}

/// Weighted sum of result vectors; uniform unit weights when `weights` is `None`.
pub fn build_corpus_vector(
    result_vectors: &[EmbeddingVector],
    weights: Option<&[f64]>,
) -> Result<CorpusVector, CompletenessError> {
    let first = result_vectors.first().ok_or(CompletenessError::EmptyCorpus)?;
    let weights = match weights {
        Some(w) => {
            if w.len() != result_vectors.len() {
                return Err(CompletenessError::DimensionMismatch(format!(
                    "{} weights for {} results",
                    w.len(),
                    result_vectors.len()
                )));
            }
            if let Some(bad) = w.iter().find(|x| !x.is_finite() || **x < 0.0) {
                return Err(CompletenessError::InvalidInput(format!(
                    "weights must be finite and nonnegative, got {bad}"
                )));
            }
            if !w.iter().any(|&x| x > 0.0) {
                return Err(CompletenessError::DegenerateWeights);
            }
            w.to_vec()
        }
        None => vec![1.0; result_vectors.len()],
    };
    let mut sum = EmbeddingVector::zeros(first.dim())?;
    for (i, (r, w)) in result_vectors.iter().zip(&weights).enumerate() {
        if r.dim() != first.dim() {
            return Err(CompletenessError::DimensionMismatch(format!(
                "result {i} has dim {}, expected {}",
                r.dim(),
                first.dim()
            )));
        }
        sum.add_scaled(r, *w)?;
    }
    Ok(CorpusVector { vector: sum, weights })
}

/// Completeness of a single result: cosine with the corpus vector.
pub fn result_completeness(
    result_vec: &EmbeddingVector,
    corpus: &CorpusVector,
) -> Result<f64, CompletenessError> {
    Ok(cosine_similarity(&corpus.vector, result_vec)?)
}

/// Completeness after viewing `viewed` (the first `n` results, `1 ≤ n ≤ N`).
pub fn cumulative_completeness(
    viewed: &[EmbeddingVector],
    corpus: &CorpusVector,
) -> Result<f64, CompletenessError> {
    if viewed.is_empty() {
        return Err(CompletenessError::InvalidInput(
            "cumulative completeness needs at least one viewed result".into(),
        ));
    }
    if viewed.len() > corpus.n_results() {
        return Err(CompletenessError::InvalidInput(format!(
            "{} viewed results exceed corpus size {}",
            viewed.len(),
            corpus.n_results()
        )));
    }
    let partial = partial_sum(viewed.iter(), corpus.vector.dim())?;
    Ok(cosine_similarity(&corpus.vector, &partial)?)
}

/// Completeness of an arbitrary viewed subset, e.g. a re-ranked page.
pub fn subset_completeness<'a, I>(
    viewed: I,
    corpus: &CorpusVector,
) -> Result<f64, CompletenessError>
where
    I: IntoIterator<Item = &'a EmbeddingVector>,
{
    let partial = partial_sum(viewed, corpus.vector.dim())?;
    if partial.is_zero() {
        return Err(CompletenessError::InvalidInput("no viewed results".into()));
    }
    Ok(cosine_similarity(&corpus.vector, &partial)?)
}

fn partial_sum<'a, I>(vectors: I, dim: usize) -> Result<EmbeddingVector, CompletenessError>
where
    I: IntoIterator<Item = &'a EmbeddingVector>,
{
    let mut sum = EmbeddingVector::zeros(dim)?;
    for v in vectors {
        sum.add_scaled(v, 1.0)
            .map_err(|e| CompletenessError::DimensionMismatch(e.to_string()))?;
    }
    Ok(sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub fraction: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletenessCurve {
    pub points: Vec<CurvePoint>,
    pub auc: f64,
}

impl CompletenessCurve {
    /// Build from the cumulative values at `n = 1..=N`. The point at
    /// fraction 0 is fixed at 0.
    pub fn from_values(values: &[f64]) -> Result<Self, CompletenessError> {
        if values.is_empty() {
            return Err(CompletenessError::EmptyCorpus);
        }
        let n = values.len() as f64;
        let mut points = Vec::with_capacity(values.len() + 1);
        points.push(CurvePoint {
            fraction: 0.0,
            value: 0.0,
        });
        points.extend(values.iter().enumerate().map(|(i, &value)| CurvePoint {
            fraction: (i + 1) as f64 / n,
            value,
        }));
        Ok(Self {
            points,
            auc: mean(values),
        })
    }

    pub fn n_results(&self) -> usize {
        self.points.len() - 1
    }

    /// Cumulative value after `n` results (`n = 0` gives 0).
    pub fn value_at(&self, n: usize) -> Option<f64> {
        self.points.get(n).map(|p| p.value)
    }

    pub fn final_value(&self) -> f64 {
        self.points.last().map(|p| p.value).unwrap_or(0.0)
    }

    /// Values at `n = 1..=N`.
    pub fn step_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().skip(1).map(|p| p.value)
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn completeness_curve(
    result_vectors: &[EmbeddingVector],
    corpus: &CorpusVector,
) -> Result<CompletenessCurve, CompletenessError> {
    if result_vectors.is_empty() {
        return Err(CompletenessError::EmptyCorpus);
    }
    if result_vectors.len() != corpus.n_results() {
        return Err(CompletenessError::InvalidInput(format!(
            "{} results for a corpus of {}",
            result_vectors.len(),
            corpus.n_results()
        )));
    }
    let mut partial = EmbeddingVector::zeros(corpus.vector.dim())?;
    let mut values = Vec::with_capacity(result_vectors.len());
    for r in result_vectors {
        partial
            .add_scaled(r, 1.0)
            .map_err(|e| CompletenessError::DimensionMismatch(e.to_string()))?;
        values.push(cosine_similarity(&corpus.vector, &partial)?);
    }
    CompletenessCurve::from_values(&values)
}

/// Relevance of a result to the query: their cosine.
pub fn relevance(
    query_vec: &EmbeddingVector,
    result_vec: &EmbeddingVector,
) -> Result<f64, CompletenessError> {
    Ok(cosine_similarity(query_vec, result_vec)?)
}

pub fn blended_score(relevance: f64, completeness: f64, lambda: Lambda) -> f64 {
    let l = lambda.value();
    l * completeness + (1.0 - l) * relevance
}

/// Viewer-facing scale: negative cosines clipped to 0, times 100, one decimal.
pub fn reporting_scale(value: f64) -> f64 {
    (value.max(0.0) * 1000.0).round() / 10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredResult {
    pub record_id: String,
    /// Original 1-based position.
    pub rank: u32,
    pub relevance: f64,
    pub completeness: f64,
    pub blended: f64,
}

impl ScoredResult {
    pub fn new(record_id: impl Into<String>, rank: u32, relevance: f64, completeness: f64, lambda: Lambda) -> Self {
        Self {
            record_id: record_id.into(),
            rank,
            relevance,
            completeness,
            blended: blended_score(relevance, completeness, lambda),
        }
    }
}

/// Re-blend with `lambda` and sort by blended score descending, ties by
/// original rank ascending.
pub fn rerank(mut scored: Vec<ScoredResult>, lambda: Lambda) -> Vec<ScoredResult> {
    for s in &mut scored {
        s.blended = blended_score(s.relevance, s.completeness, lambda);
    }
    scored.sort_by(|a, b| match b.blended.total_cmp(&a.blended) {
        Ordering::Equal => a.rank.cmp(&b.rank),
        other => other,
    });
    scored
}

/// Everything derived from one query's corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusScoring {
    pub corpus: CorpusVector,
    /// In original rank order.
    pub results: Vec<ScoredResult>,
    pub curve: CompletenessCurve,
}

/// Score results (given in original rank order) against a query.
pub fn score_corpus(
    query_vec: &EmbeddingVector,
    result_vectors: &[EmbeddingVector],
    record_ids: &[String],
    weights: Option<&[f64]>,
    lambda: Lambda,
) -> Result<CorpusScoring, CompletenessError> {
    if record_ids.len() != result_vectors.len() {
        return Err(CompletenessError::InvalidInput(format!(
            "{} ids for {} results",
            record_ids.len(),
            result_vectors.len()
        )));
    }
    let corpus = build_corpus_vector(result_vectors, weights)?;
    let curve = completeness_curve(result_vectors, &corpus)?;
    let results = result_vectors
        .iter()
        .zip(record_ids)
        .enumerate()
        .map(|(i, (r, id))| {
            Ok(ScoredResult::new(
                id.clone(),
                (i + 1) as u32,
                relevance(query_vec, r)?,
                result_completeness(r, &corpus)?,
                lambda,
            ))
        })
        .collect::<Result<Vec<_>, CompletenessError>>()?;
    Ok(CorpusScoring {
        corpus,
        results,
        curve,
    })
}
