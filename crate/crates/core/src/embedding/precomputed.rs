use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{check_batch, Embedding, EmbeddingError, EmbeddingProvider};

/// Hex SHA-256 of the exact text; the lookup key of precomputed files.
pub fn text_key(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Answers `embed_batch` from a `sha256(text)<TAB>v1,v2,...` file.
#[derive(Debug)]
pub struct PrecomputedProvider {
    vectors: HashMap<String, Embedding>,
    dim: usize,
    source: String,
}

impl PrecomputedProvider {
    /// Loads every row. Rows of differing dimension fail the load.
    pub fn load(path: &Path) -> Result<Self, EmbeddingError> {
        let source = path.display().to_string();
        let load_err = |message: String| EmbeddingError::Load {
            path: source.clone(),
            message,
        };
        let file = File::open(path).map_err(|e| load_err(e.to_string()))?;
        let mut vectors = HashMap::new();
        let mut dim = None;
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| load_err(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let (key, values) = line
                .split_once('\t')
                .ok_or_else(|| load_err(format!("line {}: missing tab", i + 1)))?;
            let values = values
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| load_err(format!("line {}: {e}", i + 1)))?;
            match dim {
                None => dim = Some(values.len()),
                Some(d) if d != values.len() => {
                    return Err(EmbeddingError::DimensionMismatch {
                        expected: d,
                        found: values.len(),
                    })
                }
                Some(_) => {}
            }
            let emb = Embedding::normalized(values)
                .map_err(|e| load_err(format!("line {}: {e}", i + 1)))?;
            vectors.insert(key.trim().to_ascii_lowercase(), emb);
        }
        let dim = dim.ok_or_else(|| load_err("file holds no vectors".into()))?;
        Ok(Self {
            vectors,
            dim,
            source,
        })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

impl EmbeddingProvider for PrecomputedProvider {
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Embedding>, EmbeddingError> {
        check_batch(texts)?;
        texts
            .iter()
            .map(|t| {
                self.vectors
                    .get(&text_key(t))
                    .cloned()
                    .ok_or_else(|| EmbeddingError::ProviderMiss((*t).to_string()))
            })
            .collect()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn model_id(&self) -> String {
        format!("precomputed:{}", self.source)
    }
}

/// Embeds `texts` with `provider` and writes them in the precomputed format.
/// Duplicate texts are written once.
pub fn write_precomputed<P: EmbeddingProvider + ?Sized>(
    path: &Path,
    provider: &P,
    texts: &[&str],
) -> Result<usize, EmbeddingError> {
    let io_err = |e: std::io::Error| EmbeddingError::Load {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let mut unique: Vec<&str> = texts.to_vec();
    unique.sort_unstable();
    unique.dedup();
    let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
    for chunk in unique.chunks(64) {
        let vectors = provider.embed_batch(chunk)?;
        for (text, v) in chunk.iter().zip(vectors) {
            let values: Vec<String> = v.values().iter().map(f64::to_string).collect();
            writeln!(out, "{}\t{}", text_key(text), values.join(",")).map_err(io_err)?;
        }
    }
    out.flush().map_err(io_err)?;
    Ok(unique.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{mock_embed, MockProvider};

    #[test]
    fn known_sha256_key() {
        assert_eq!(
            text_key("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn two_entries_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("emb.tsv");
        write_precomputed(&p, &MockProvider, &["first text", "second text"]).unwrap();
        let provider = PrecomputedProvider::load(&p).unwrap();
        assert_eq!(provider.len(), 2);
        assert_eq!(provider.dim(), 256);
        let got = provider
            .embed_batch(&["second text", "first text"])
            .unwrap();
        for (v, t) in got.iter().zip(["second text", "first text"]) {
            let want = mock_embed(t);
            let max_diff = v
                .values()
                .iter()
                .zip(want.values())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(max_diff < 1e-15);
        }
    }

    #[test]
    fn missing_text_is_a_miss() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("emb.tsv");
        write_precomputed(&p, &MockProvider, &["known"]).unwrap();
        let provider = PrecomputedProvider::load(&p).unwrap();
        assert_eq!(
            provider.embed_batch(&["unknown"]),
            Err(EmbeddingError::ProviderMiss("unknown".into()))
        );
    }

    #[test]
    fn mixed_dimensions_fail_at_load() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("emb.tsv");
        std::fs::write(
            &p,
            format!("{}\t1,0,0\n{}\t0,1\n", text_key("a"), text_key("b")),
        )
        .unwrap();
        assert_eq!(
            PrecomputedProvider::load(&p).err(),
            Some(EmbeddingError::DimensionMismatch {
                expected: 3,
                found: 2
            })
        );
    }

    #[test]
    fn vectors_are_normalized_on_load() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("emb.tsv");
        std::fs::write(&p, format!("{}\t3,4\n", text_key("a"))).unwrap();
        let provider = PrecomputedProvider::load(&p).unwrap();
        assert_eq!(
            provider.embed_batch(&["a"]).unwrap()[0].values(),
            &[0.6, 0.8]
        );
    }
}
