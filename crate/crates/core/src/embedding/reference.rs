//! Deterministic hashed bag-of-tokens embedder.
//!
//! Text is lowercased and split on runs of non-alphanumeric characters; each
//! token is hashed with 64-bit FNV-1a into one of `dim` buckets and the bucket
//! counts form the vector. The output depends only on `(text, dim, normalize)`.

use super::{EmbedError, Embedder, EmbeddingVector};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |hash, &b| {
        (hash ^ u64::from(b)).wrapping_mul(FNV_PRIME)
    })
}

/// Lowercased alphanumeric tokens of `text`.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone)]
pub struct ReferenceHashEmbedder {
    dim: usize,
    normalize: bool,
}

impl ReferenceHashEmbedder {
    pub fn new(dim: usize, normalize: bool) -> Result<Self, EmbedError> {
        if dim < 2 {
            return Err(EmbedError::InvalidConfig(format!("dim must be >= 2, got {dim}")));
        }
        Ok(Self { dim, normalize })
    }

    /// Raw token counts before normalization.
    pub fn counts(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        let trimmed = text.trim();
        if trimmed.is_empty() {
            return Err(EmbedError::InvalidInput("text is empty".into()));
        }
        let mut counts = vec![0.0; self.dim];
        let mut tokens = tokenize(trimmed);
        if tokens.is_empty() {
            // punctuation-only text: the whole string acts as one token
            tokens.push(trimmed.to_lowercase());
        }
        for token in &tokens {
            counts[self.bucket(token)] += 1.0;
        }
        Ok(counts)
    }

    pub fn bucket(&self, token: &str) -> usize {
        (fnv1a64(token.as_bytes()) % self.dim as u64) as usize
    }
}

impl Embedder for ReferenceHashEmbedder {
    fn name(&self) -> &str {
        "reference-hash"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        let v = EmbeddingVector::new(self.counts(text)?)?;
        if self.normalize {
            v.normalize()
        } else {
            Ok(v)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_known_values() {
        // published FNV-1a 64 test vectors
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn tokenizer_splits_on_non_alphanumeric() {
        assert_eq!(tokenize("Floods in  PAKISTAN!"), vec!["floods", "in", "pakistan"]);
        assert_eq!(tokenize("don't-stop"), vec!["don", "t", "stop"]);
        assert!(tokenize("?!").is_empty());
    }

    #[test]
    fn counts_are_token_occurrences() {
        let e = ReferenceHashEmbedder::new(64, false).unwrap();
        let c = e.counts("a b a").unwrap();
        assert_eq!(c.iter().sum::<f64>(), 3.0);
        assert_eq!(c[e.bucket("a")], if e.bucket("a") == e.bucket("b") { 3.0 } else { 2.0 });
    }

    #[test]
    fn punctuation_only_text_is_nonzero() {
        let e = ReferenceHashEmbedder::new(16, true).unwrap();
        let v = e.embed("?!").unwrap();
        assert!(!v.is_zero());
    }

    #[test]
    fn rejects_small_dim_and_blank_text() {
        assert!(ReferenceHashEmbedder::new(1, true).is_err());
        let e = ReferenceHashEmbedder::new(8, true).unwrap();
        assert!(matches!(e.embed("   "), Err(EmbedError::InvalidInput(_))));
    }
}
