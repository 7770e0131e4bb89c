//! Sentence embeddings behind a uniform provider interface.
//!
//! Three backends exist: a deterministic character-trigram [`MockProvider`],
//! a [`PrecomputedProvider`] answering from a hash-keyed TSV file, and a
//! [`RemoteProvider`] speaking the `/embed` + `/health` HTTP protocol.
//! [`CachedProvider`] memoizes any of them per run.

mod cache;
mod mock;
mod precomputed;
mod remote;

use thiserror::Error;

pub use cache::CachedProvider;
pub use mock::{mock_embed, MockProvider, MOCK_DIM};
pub use precomputed::{text_key, write_precomputed, PrecomputedProvider};
pub use remote::{EmbedRequest, EmbedResponse, HealthResponse, RemoteOptions, RemoteProvider};

/// Tolerance on the unit-norm invariant and cosine bounds.
pub const NORM_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EmbeddingError {
    #[error("embedding provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("no precomputed embedding for text {0:?}")]
    ProviderMiss(String),
    #[error("invalid embedding input: {0}")]
    InvalidInput(String),
    #[error("cannot read embeddings from {path}: {message}")]
    Load { path: String, message: String },
}

/// An L2-normalized embedding vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    values: Vec<f64>,
}

impl Embedding {
    /// Normalizes `values` to unit length. Zero or non-finite input is
    /// rejected.
    pub fn normalized(mut values: Vec<f64>) -> Result<Self, EmbeddingError> {
        if values.is_empty() {
            return Err(EmbeddingError::InvalidInput("empty vector".into()));
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(EmbeddingError::InvalidInput(format!(
                "vector norm {norm} cannot be normalized"
            )));
        }
        values.iter_mut().for_each(|v| *v /= norm);
        Ok(Self { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Cosine similarity of two normalized vectors, clamped to `[-1, 1]`.
pub fn similarity(a: &Embedding, b: &Embedding) -> Result<f64, EmbeddingError> {
    if a.dim() != b.dim() {
        return Err(EmbeddingError::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let dot: f64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum();
    Ok(dot.clamp(-1.0, 1.0))
}

/// Source of sentence embeddings. Implementations must tolerate concurrent
/// calls from worker threads.
pub trait EmbeddingProvider: Send + Sync {
    /// One normalized vector per text, in input order.
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Embedding>, EmbeddingError>;

    /// Vector dimension, constant for the provider's lifetime.
    fn dim(&self) -> usize;

    /// Identifier recorded in run manifests.
    fn model_id(&self) -> String;
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for std::sync::Arc<P> {
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Embedding>, EmbeddingError> {
        (**self).embed_batch(texts)
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn model_id(&self) -> String {
        (**self).model_id()
    }
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for Box<P> {
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Embedding>, EmbeddingError> {
        (**self).embed_batch(texts)
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn model_id(&self) -> String {
        (**self).model_id()
    }
}

pub(crate) fn check_batch(texts: &[&str]) -> Result<(), EmbeddingError> {
    if texts.is_empty() {
        return Err(EmbeddingError::InvalidInput("empty batch".into()));
    }
    if let Some(i) = texts.iter().position(|t| t.is_empty()) {
        return Err(EmbeddingError::InvalidInput(format!("text {i} is empty")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn self_similarity_is_one() {
        let v = Embedding::normalized(vec![3.0, 4.0, 12.0]).unwrap();
        assert!((similarity(&v, &v).unwrap() - 1.0).abs() < NORM_EPS);
    }

    #[test]
    fn orthogonal_is_zero() {
        let a = Embedding::normalized(vec![1.0, 0.0]).unwrap();
        let b = Embedding::normalized(vec![0.0, 2.0]).unwrap();
        assert_eq!(similarity(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch() {
        let a = Embedding::normalized(vec![1.0, 0.0]).unwrap();
        let b = Embedding::normalized(vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(
            similarity(&a, &b),
            Err(EmbeddingError::DimensionMismatch {
                expected: 2,
                found: 3
            })
        );
    }

    #[test]
    fn zero_vector_rejected() {
        assert!(Embedding::normalized(vec![0.0, 0.0]).is_err());
        assert!(Embedding::normalized(vec![]).is_err());
        assert!(Embedding::normalized(vec![f64::NAN]).is_err());
    }

    proptest! {
        #[test]
        fn symmetric_bounded_and_unit(
            a in proptest::collection::vec(-10.0f64..10.0, 8),
            b in proptest::collection::vec(-10.0f64..10.0, 8),
        ) {
            prop_assume!(a.iter().any(|v| v.abs() > 1e-3) && b.iter().any(|v| v.abs() > 1e-3));
            let a = Embedding::normalized(a).unwrap();
            let b = Embedding::normalized(b).unwrap();
            let norm: f64 = a.values().iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!((norm - 1.0).abs() < NORM_EPS);
            let ab = similarity(&a, &b).unwrap();
            prop_assert_eq!(ab, similarity(&b, &a).unwrap());
            prop_assert!((-1.0..=1.0).contains(&ab));
        }
    }
}
