use super::{check_batch, Embedding, EmbeddingError, EmbeddingProvider};

pub const MOCK_DIM: usize = 256;

const BOUNDARY_START: char = '\u{2}';
const BOUNDARY_END: char = '\u{3}';

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Deterministic offline embedding: character trigrams of the text (padded
/// with boundary markers) hashed into [`MOCK_DIM`] buckets, then
/// L2-normalized. Text with no trigrams maps to the first basis vector.
pub fn mock_embed(text: &str) -> Embedding {
    let padded: Vec<char> = std::iter::once(BOUNDARY_START)
        .chain(text.chars())
        .chain(std::iter::once(BOUNDARY_END))
        .collect();
    let mut counts = vec![0.0f64; MOCK_DIM];
    let mut buf = String::new();
    for w in padded.windows(3) {
        buf.clear();
        buf.extend(w);
        counts[(fnv1a(buf.as_bytes()) % MOCK_DIM as u64) as usize] += 1.0;
    }
    if counts.iter().all(|&c| c == 0.0) {
        counts[0] = 1.0;
    }
    Embedding::normalized(counts).expect("non-zero histogram")
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MockProvider;

impl EmbeddingProvider for MockProvider {
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Embedding>, EmbeddingError> {
        check_batch(texts)?;
        Ok(texts.iter().map(|t| mock_embed(t)).collect())
    }

    fn dim(&self) -> usize {
        MOCK_DIM
    }

    fn model_id(&self) -> String {
        format!("mock-char-trigram-{MOCK_DIM}")
    }
}
