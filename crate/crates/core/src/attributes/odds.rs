use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::AttributeError;
use crate::corpus::{ParallelPair, SentenceRecord};

/// Default minimum `w_i + w_j` for a word to enter the dictionary.
pub const DEFAULT_FLOOR: usize = 5;

/// `(w_i / w_j) / (n_i / n_j)`: how much more often a word appears in corpus
/// `i` than in corpus `j`, normalized by corpus size. With `add_one` both
/// word counts are incremented first. `None` when undefined.
pub fn odds_ratio(w_i: usize, w_j: usize, n_i: usize, n_j: usize, add_one: bool) -> Option<f64> {
    let bump = if add_one { 1.0 } else { 0.0 };
    let (wi, wj) = (w_i as f64 + bump, w_j as f64 + bump);
    if wj == 0.0 || n_i == 0 || n_j == 0 {
        return None;
    }
    let r = (wi / wj) / (n_i as f64 / n_j as f64);
    (r.is_finite()).then_some(r)
}

/// Word counts of the simple (`i`) and complex (`j`) sides of a corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WordCounts {
    pub simple: HashMap<String, usize>,
    pub complex: HashMap<String, usize>,
    pub n_simple: usize,
    pub n_complex: usize,
}

impl WordCounts {
    fn add(map: &mut HashMap<String, usize>, total: &mut usize, s: &SentenceRecord) {
        for w in s.word_tokens() {
            *map.entry(w.to_string()).or_insert(0) += 1;
            *total += 1;
        }
    }

    pub fn add_simple(&mut self, s: &SentenceRecord) {
        Self::add(&mut self.simple, &mut self.n_simple, s);
    }

    pub fn add_complex(&mut self, s: &SentenceRecord) {
        Self::add(&mut self.complex, &mut self.n_complex, s);
    }

    pub fn add_pair(&mut self, pair: &ParallelPair) {
        self.add_complex(&pair.source);
        self.add_simple(&pair.target);
    }

    pub fn simple_count(&self, w: &str) -> usize {
        self.simple.get(w).copied().unwrap_or(0)
    }

    pub fn complex_count(&self, w: &str) -> usize {
        self.complex.get(w).copied().unwrap_or(0)
    }

    /// Unsmoothed ratio of one word.
    pub fn ratio(&self, w: &str) -> Option<f64> {
        odds_ratio(
            self.simple_count(w),
            self.complex_count(w),
            self.n_simple,
            self.n_complex,
            false,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OddsEntry {
    pub ratio: f64,
    pub w_i: usize,
    pub w_j: usize,
}

/// Per-word odds ratios of simple-side over complex-side usage. Words not
/// stored are neutral (1.0).
#[derive(Debug, Clone, PartialEq)]
pub struct OddsRatioDict {
    entries: HashMap<String, OddsEntry>,
    n_i: usize,
    n_j: usize,
    add_one: bool,
    floor: usize,
}

impl OddsRatioDict {
    pub fn from_counts(
        counts: &WordCounts,
        floor: usize,
        add_one: bool,
    ) -> Result<Self, AttributeError> {
        if counts.n_simple == 0 || counts.n_complex == 0 {
            return Err(AttributeError::EmptyCorpus);
        }
        let mut entries = HashMap::new();
        let words = counts.simple.keys().chain(counts.complex.keys());
        for w in words {
            if entries.contains_key(w) {
                continue;
            }
            let (w_i, w_j) = (counts.simple_count(w), counts.complex_count(w));
            if w_i + w_j < floor {
                continue;
            }
            if let Some(ratio) = odds_ratio(w_i, w_j, counts.n_simple, counts.n_complex, add_one) {
                if ratio > 0.0 {
                    entries.insert(w.clone(), OddsEntry { ratio, w_i, w_j });
                }
            }
        }
        Ok(Self {
            entries,
            n_i: counts.n_simple,
            n_j: counts.n_complex,
            add_one,
            floor,
        })
    }

    pub fn ratio(&self, word: &str) -> f64 {
        self.entries.get(word).map_or(1.0, |e| e.ratio)
    }

    pub fn entry(&self, word: &str) -> Option<&OddsEntry> {
        self.entries.get(word)
    }

    /// Mean ratio over the given word tokens; 1.0 for none.
    pub fn average<'a>(&self, words: impl IntoIterator<Item = &'a str>) -> f64 {
        let (sum, n) = words
            .into_iter()
            .fold((0.0, 0usize), |(s, n), w| (s + self.ratio(w), n + 1));
        if n == 0 {
            1.0
        } else {
            sum / n as f64
        }
    }

    pub fn n_i(&self) -> usize {
        self.n_i
    }

    pub fn n_j(&self) -> usize {
        self.n_j
    }

    pub fn add_one(&self) -> bool {
        self.add_one
    }

    pub fn floor(&self) -> usize {
        self.floor
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Writes `word<TAB>ratio<TAB>w_i<TAB>w_j` rows sorted by word, after a
    /// `#n_i=..<TAB>n_j=..` header.
    pub fn save(&self, path: &Path) -> Result<(), AttributeError> {
        let io = |e| AttributeError::io(path, e);
        let mut out = BufWriter::new(File::create(path).map_err(io)?);
        writeln!(
            out,
            "#n_i={}\tn_j={}\tsmoothing={}\tfloor={}",
            self.n_i,
            self.n_j,
            if self.add_one { "add_one" } else { "none" },
            self.floor
        )
        .map_err(io)?;
        let sorted: BTreeMap<_, _> = self.entries.iter().collect();
        for (w, e) in sorted {
            writeln!(out, "{w}\t{}\t{}\t{}", e.ratio, e.w_i, e.w_j).map_err(io)?;
        }
        out.flush().map_err(io)
    }

    pub fn load(path: &Path) -> Result<Self, AttributeError> {
        let file = File::open(path).map_err(|e| AttributeError::io(path, e))?;
        Self::from_reader(BufReader::new(file))
            .map_err(|e| AttributeError::OddsDict(format!("{}: {e}", path.display())))
    }

    pub fn from_reader(reader: impl BufRead) -> Result<Self, String> {
        let mut lines = reader.lines().enumerate();
        let header = match lines.next() {
            Some((_, line)) => line.map_err(|e| e.to_string())?,
            None => return Err("empty file".into()),
        };
        let header = header
            .strip_prefix('#')
            .ok_or("first line must be the #n_i=..\\tn_j=.. header")?;
        let mut fields: HashMap<&str, &str> = HashMap::new();
        for part in header.split('\t') {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| format!("bad header field {part:?}"))?;
            fields.insert(k.trim(), v.trim());
        }
        let num = |k: &str| -> Result<usize, String> {
            fields
                .get(k)
                .ok_or_else(|| format!("header lacks {k}"))?
                .parse()
                .map_err(|e| format!("header {k}: {e}"))
        };
        let n_i = num("n_i")?;
        let n_j = num("n_j")?;
        let floor = if fields.contains_key("floor") {
            num("floor")?
        } else {
            DEFAULT_FLOOR
        };
        let add_one = fields.get("smoothing").is_none_or(|s| *s == "add_one");

        let mut entries = HashMap::new();
        for (i, line) in lines {
            let line = line.map_err(|e| format!("line {}: {e}", i + 1))?;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 4 {
                return Err(format!(
                    "line {}: expected 4 columns, found {}",
                    i + 1,
                    cols.len()
                ));
            }
            let bad = |e: &dyn std::fmt::Display| format!("line {}: {e}", i + 1);
            let ratio: f64 = cols[1].parse().map_err(|e| bad(&e))?;
            if !(ratio.is_finite() && ratio > 0.0) {
                return Err(format!(
                    "line {}: ratio must be positive, got {ratio}",
                    i + 1
                ));
            }
            let entry = OddsEntry {
                ratio,
                w_i: cols[2].parse().map_err(|e| bad(&e))?,
                w_j: cols[3].parse().map_err(|e| bad(&e))?,
            };
            entries.insert(cols[0].to_string(), entry);
        }
        Ok(Self {
            entries,
            n_i,
            n_j,
            add_one,
            floor,
        })
    }
}

/// Builds the smoothed dictionary from a reference corpus: targets form the
/// simple corpus, sources the complex one.
pub fn build_odds_dict<I>(pairs: I, floor: usize) -> Result<OddsRatioDict, AttributeError>
where
    I: IntoIterator<Item = ParallelPair>,
{
    let mut counts = WordCounts::default();
    for p in pairs {
        counts.add_pair(&p);
    }
    OddsRatioDict::from_counts(&counts, floor, true)
}
