use std::collections::HashMap;
use std::sync::RwLock;

use super::{check_batch, Embedding, EmbeddingError, EmbeddingProvider};

/// Per-run memo keyed by exact text. Misses are forwarded to the inner
/// provider in one batch; cached and fresh vectors are identical. When the
/// entry count would pass the capacity the memo is emptied.
pub struct CachedProvider<P> {
    inner: P,
    cache: RwLock<HashMap<String, Embedding>>,
    capacity: usize,
}

impl<P: EmbeddingProvider> CachedProvider<P> {
    pub fn new(inner: P) -> Self {
        Self::with_capacity(inner, usize::MAX)
    }

    pub fn with_capacity(inner: P, capacity: usize) -> Self {
        Self {
            inner,
            cache: RwLock::new(HashMap::new()),
            capacity: capacity.max(1),
        }
    }

    pub fn len(&self) -> usize {
        self.cache.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }
}

impl<P: EmbeddingProvider> EmbeddingProvider for CachedProvider<P> {
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Embedding>, EmbeddingError> {
        check_batch(texts)?;
        let mut misses: Vec<&str> = {
            let cache = self.cache.read().expect("cache lock");
            texts
                .iter()
                .copied()
                .filter(|t| !cache.contains_key(*t))
                .collect()
        };
        misses.sort_unstable();
        misses.dedup();

        if !misses.is_empty() {
            let fresh = self.inner.embed_batch(&misses)?;
            if fresh.len() != misses.len() {
                return Err(EmbeddingError::ProviderUnavailable(format!(
                    "provider returned {} vectors for {} texts",
                    fresh.len(),
                    misses.len()
                )));
            }
            let dim = self.inner.dim();
            if let Some(bad) = fresh.iter().find(|v| v.dim() != dim) {
                return Err(EmbeddingError::DimensionMismatch {
                    expected: dim,
                    found: bad.dim(),
                });
            }
            let mut cache = self.cache.write().expect("cache lock");
            // Resolve hits before any eviction.
            let found: Vec<Embedding> = texts
                .iter()
                .map(|t| match misses.binary_search(t) {
                    Ok(i) => Ok(fresh[i].clone()),
                    Err(_) => cache.get(*t).cloned().ok_or(()),
                })
                .collect::<Result<_, ()>>()
                .or_else(|()| self.inner.embed_batch(texts))?;
            if cache.len() + misses.len() > self.capacity {
                cache.clear();
            }
            for (text, vec) in misses.iter().zip(fresh) {
                // A concurrent writer may have won; keep the first vector.
                cache.entry((*text).to_string()).or_insert(vec);
            }
            return Ok(found);
        }

        let cache = self.cache.read().expect("cache lock");
        match texts
            .iter()
            .map(|t| cache.get(*t).cloned())
            .collect::<Option<Vec<_>>>()
        {
            Some(v) => Ok(v),
            // Another thread evicted entries after the first read.
            None => {
                drop(cache);
                self.inner.embed_batch(texts)
            }
        }
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn model_id(&self) -> String {
        self.inner.model_id()
    }
}
