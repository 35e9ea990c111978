use serde::{Deserialize, Serialize};

use super::EmbedError;

/// Tolerance on the Euclidean norm of a vector flagged as normalized.
pub const NORM_TOLERANCE: f64 = 1e-9;

/// Fixed-dimension real vector representing a span of text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawVector", into = "RawVector")]
pub struct EmbeddingVector {
    values: Vec<f64>,
    normalized: bool,
}

#[derive(Serialize, Deserialize)]
struct RawVector {
    values: Vec<f64>,
    #[serde(default)]
    normalized: bool,
}

impl TryFrom<RawVector> for EmbeddingVector {
    type Error = EmbedError;

    fn try_from(raw: RawVector) -> Result<Self, Self::Error> {
        let v = EmbeddingVector::new(raw.values)?;
        if raw.normalized {
            if v.is_zero() || (v.norm() - 1.0).abs() > NORM_TOLERANCE {
                return Err(EmbedError::InvalidInput(
                    "vector flagged normalized does not have unit norm".into(),
                ));
            }
            return Ok(EmbeddingVector {
                normalized: true,
                ..v
            });
        }
        Ok(v)
    }
}

impl From<EmbeddingVector> for RawVector {
    fn from(v: EmbeddingVector) -> Self {
        RawVector {
            values: v.values,
            normalized: v.normalized,
        }
    }
}

impl EmbeddingVector {
    /// Build an unnormalized vector. Rejects empty input and non-finite components.
    pub fn new(values: Vec<f64>) -> Result<Self, EmbedError> {
        if values.is_empty() {
            return Err(EmbedError::InvalidInput("vector must have dim >= 1".into()));
        }
        if let Some(i) = values.iter().position(|x| !x.is_finite()) {
            return Err(EmbedError::InvalidInput(format!(
                "component {i} is not finite"
            )));
        }
        Ok(Self {
            values,
            normalized: false,
        })
    }

    /// All-zero vector of the given dimension.
    pub fn zeros(dim: usize) -> Result<Self, EmbedError> {
        Self::new(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&x| x == 0.0)
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &Self) -> Result<f64, EmbedError> {
        self.check_dim(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum())
    }

    /// Scale to unit Euclidean norm. The zero vector cannot be normalized.
    pub fn normalize(&self) -> Result<Self, EmbedError> {
        let norm = self.norm();
        if norm == 0.0 {
            return Err(EmbedError::DegenerateVector);
        }
        Ok(Self {
            values: self.values.iter().map(|x| x / norm).collect(),
            normalized: true,
        })
    }

    /// Multiply every component by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self, EmbedError> {
        Self::new(self.values.iter().map(|x| x * factor).collect())
    }

    /// Accumulate `weight * other` into `self`.
    pub fn add_scaled(&mut self, other: &Self, weight: f64) -> Result<(), EmbedError> {
        self.check_dim(other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += weight * b;
        }
        self.normalized = false;
        Ok(())
    }

    pub(crate) fn check_dim(&self, other: &Self) -> Result<(), EmbedError> {
        if self.dim() != other.dim() {
            return Err(EmbedError::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(())
    }
}

/// Cosine of the angle between two nonzero vectors, clamped to [-1, 1].
pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, EmbedError> {
    a.check_dim(b)?;
    let na = a.norm();
    let nb = b.norm();
    if na == 0.0 || nb == 0.0 {
        return Err(EmbedError::DegenerateVector);
    }
    let cos = a.dot(b)? / (na * nb);
    Ok(cos.clamp(-1.0, 1.0))
}
