use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::AttributeError;

/// Word complexity scores from a `word<TAB>score` file. Lookup is
/// case-insensitive; multi-word entries never match a single token.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ComplexityLexicon {
    scores: HashMap<String, f64>,
}

impl ComplexityLexicon {
    pub fn from_entries<I, S>(entries: I) -> Result<Self, AttributeError>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: AsRef<str>,
    {
        let mut scores = HashMap::new();
        for (word, score) in entries {
            let word = word.as_ref();
            if !score.is_finite() || score < 0.0 {
                return Err(AttributeError::Lexicon(format!(
                    "word {word:?}: invalid score {score}"
                )));
            }
            scores.insert(word.to_lowercase(), score);
        }
        Ok(Self { scores })
    }

    /// Reads a UTF-8 TSV lexicon. Blank lines and `#` comments are skipped;
    /// a duplicated word keeps its last score.
    pub fn load(path: &Path) -> Result<Self, AttributeError> {
        let file = File::open(path).map_err(|e| AttributeError::io(path, e))?;
        Self::from_reader(BufReader::new(file))
            .map_err(|e| AttributeError::Lexicon(format!("{}: {e}", path.display())))
    }

    pub fn from_reader(reader: impl BufRead) -> Result<Self, String> {
        let mut entries = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| format!("line {}: {e}", i + 1))?;
            let line = line.trim_end_matches(['\r', '\n']);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split('\t');
            let (Some(word), Some(score)) = (cols.next(), cols.next()) else {
                return Err(format!("line {}: expected word<TAB>score", i + 1));
            };
            let score: f64 = score
                .trim()
                .parse()
                .map_err(|e| format!("line {}: bad score {score:?}: {e}", i + 1))?;
            entries.push((word.trim().to_string(), score));
        }
        Self::from_entries(entries).map_err(|e| e.to_string())
    }

    pub fn score(&self, word: &str) -> Option<f64> {
        self.scores
            .get(word)
            .or_else(|| self.scores.get(&word.to_lowercase()))
            .copied()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// `(in_lexicon, total)` over the given word tokens.
    pub fn coverage<'a>(&self, words: impl IntoIterator<Item = &'a str>) -> (usize, usize) {
        words.into_iter().fold((0, 0), |(hit, total), w| {
            (hit + usize::from(self.score(w).is_some()), total + 1)
        })
    }

    /// Mean score over in-lexicon tokens; 0 when none are covered.
    pub fn average<'a>(&self, words: impl IntoIterator<Item = &'a str>) -> f64 {
        let (sum, n) = words
            .into_iter()
            .filter_map(|w| self.score(w))
            .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }
}
