//! Streaming loaders. Readers hold one line in memory at a time; malformed
//! records are skipped, logged and tallied, while I/O failures and
//! structural mismatches in parallel files are fatal.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::hash::{BuildHasher, BuildHasherDefault, DefaultHasher};
use std::io::{self, BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{segment::split_sentences, DocumentRecord, ParallelPair};

/// A record that was skipped. Never aborts a run.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum RecordError {
    #[error("line {line}: malformed JSON: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: missing field `{field}`")]
    MissingField { line: usize, field: &'static str },
    #[error("line {line}: invalid UTF-8")]
    BadEncoding { line: usize },
    #[error("line {line}: record `{doc_id}` has an empty summary")]
    EmptySummary { line: usize, doc_id: String },
    #[error("line {line}: record `{doc_id}` has an empty document")]
    EmptyDocument { line: usize, doc_id: String },
    #[error("line {line}: duplicate id `{doc_id}`")]
    DuplicateId { line: usize, doc_id: String },
    #[error("line {line}: empty source or target")]
    EmptyLine { line: usize },
}

impl RecordError {
    pub fn kind(&self) -> &'static str {
        match self {
            RecordError::Malformed { .. } => "malformed",
            RecordError::MissingField { .. } => "missing_field",
            RecordError::BadEncoding { .. } => "bad_encoding",
            RecordError::EmptySummary { .. } => "empty_summary",
            RecordError::EmptyDocument { .. } => "empty_document",
            RecordError::DuplicateId { .. } => "duplicate_id",
            RecordError::EmptyLine { .. } => "empty_line",
        }
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("line count mismatch: {source_lines} source lines vs {target_lines} target lines")]
    LineCountMismatch {
        source_lines: usize,
        target_lines: usize,
    },
    #[error("line {line}: expected 2 tab-separated columns, found {found}")]
    ColumnCount { line: usize, found: usize },
}

/// Running counts of loaded and skipped records.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LoadTally {
    pub records: usize,
    pub skipped: BTreeMap<String, usize>,
    #[serde(skip)]
    pub first_errors: Vec<RecordError>,
}

const KEPT_ERRORS: usize = 32;

impl LoadTally {
    pub fn skipped_total(&self) -> usize {
        self.skipped.values().sum()
    }

    fn skip(&mut self, err: RecordError) {
        log::warn!("skipping record: {err}");
        *self.skipped.entry(err.kind().to_string()).or_insert(0) += 1;
        if self.first_errors.len() < KEPT_ERRORS {
            self.first_errors.push(err);
        }
    }
}

struct LineReader {
    path: PathBuf,
    inner: Box<dyn BufRead + Send>,
    line: usize,
    buf: Vec<u8>,
}

/// Line number and either (id, source, target) or the record-level failure.
type RawRow = (usize, Result<(String, String, String), RecordError>);

enum Line {
    Text(String),
    BadEncoding,
}

impl LineReader {
    fn open(path: &Path) -> Result<Self, CorpusError> {
        let file = File::open(path).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Self::new(
            path.to_path_buf(),
            Box::new(BufReader::new(file)),
        ))
    }

    fn new(path: PathBuf, inner: Box<dyn BufRead + Send>) -> Self {
        Self {
            path,
            inner,
            line: 0,
            buf: Vec::new(),
        }
    }

    fn next_line(&mut self) -> Result<Option<(usize, Line)>, CorpusError> {
        self.buf.clear();
        let n = self
            .inner
            .read_until(b'\n', &mut self.buf)
            .map_err(|source| CorpusError::Io {
                path: self.path.clone(),
                source,
            })?;
        if n == 0 {
            return Ok(None);
        }
        self.line += 1;
        while matches!(self.buf.last(), Some(b'\n' | b'\r')) {
            self.buf.pop();
        }
        let line = match std::str::from_utf8(&self.buf) {
            Ok(s) => Line::Text(s.to_string()),
            Err(_) => Line::BadEncoding,
        };
        Ok(Some((self.line, line)))
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TextField {
    Block(String),
    Sentences(Vec<String>),
}

#[derive(Deserialize)]
struct RawDocument {
    id: Option<String>,
    document: Option<TextField>,
    summary: Option<TextField>,
}

fn field_sentences(field: &TextField) -> Vec<&str> {
    match field {
        TextField::Block(text) => split_sentences(text),
        // Pre-segmented input bypasses the splitter.
        TextField::Sentences(list) => list.iter().map(String::as_str).collect(),
    }
}

/// Streaming reader over the JSON Lines document corpus.
pub struct DocumentReader {
    lines: LineReader,
    seen_ids: HashSet<u64>,
    tally: LoadTally,
}

impl DocumentReader {
    pub fn from_reader(reader: impl BufRead + Send + 'static) -> Self {
        Self {
            lines: LineReader::new(PathBuf::from("<reader>"), Box::new(reader)),
            seen_ids: HashSet::new(),
            tally: LoadTally::default(),
        }
    }

    pub fn tally(&self) -> &LoadTally {
        &self.tally
    }

    fn parse(&mut self, line_no: usize, text: &str) -> Result<DocumentRecord, RecordError> {
        let raw: RawDocument = serde_json::from_str(text).map_err(|e| RecordError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        let missing = |field| RecordError::MissingField {
            line: line_no,
            field,
        };
        let doc_id = raw.id.ok_or_else(|| missing("id"))?;
        let document = raw.document.ok_or_else(|| missing("document"))?;
        let summary = raw.summary.ok_or_else(|| missing("summary"))?;

        let record = DocumentRecord::from_sentences(
            doc_id,
            field_sentences(&document),
            field_sentences(&summary),
        );
        if record.summary_sentences.is_empty() {
            return Err(RecordError::EmptySummary {
                line: line_no,
                doc_id: record.doc_id,
            });
        }
        if record.doc_sentences.is_empty() {
            return Err(RecordError::EmptyDocument {
                line: line_no,
                doc_id: record.doc_id,
            });
        }
        // Ids are tracked by a fixed-key 64-bit hash to keep memory flat.
        let key = BuildHasherDefault::<DefaultHasher>::default().hash_one(&record.doc_id);
        if !self.seen_ids.insert(key) {
            return Err(RecordError::DuplicateId {
                line: line_no,
                doc_id: record.doc_id,
            });
        }
        Ok(record)
    }
}

impl Iterator for DocumentReader {
    type Item = Result<DocumentRecord, CorpusError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let (line_no, line) = match self.lines.next_line() {
                Ok(Some(l)) => l,
                Ok(None) => return None,
                Err(e) => return Some(Err(e)),
            };
            let text = match line {
                Line::Text(t) => t,
                Line::BadEncoding => {
                    self.tally.skip(RecordError::BadEncoding { line: line_no });
                    continue;
                }
            };
            if text.trim().is_empty() {
                continue;
            }
            match self.parse(line_no, &text) {
                Ok(doc) => {
                    self.tally.records += 1;
                    return Some(Ok(doc));
                }
                Err(e) => self.tally.skip(e),
            }
        }
    }
}

/// Opens a JSON Lines document corpus for streaming.
pub fn load_document_corpus(path: &Path) -> Result<DocumentReader, CorpusError> {
    let lines = LineReader::open(path)?;
    Ok(DocumentReader {
        lines,
        seen_ids: HashSet::new(),
        tally: LoadTally::default(),
    })
}

enum ParallelSource {
    TwoFiles {
        source: LineReader,
        target: LineReader,
    },
    Tsv(LineReader),
    Jsonl(LineReader),
}

#[derive(Deserialize)]
struct RawPair {
    id: Option<String>,
    source: Option<String>,
    target: Option<String>,
}

/// Streaming reader over a complex/simple parallel corpus.
pub struct ParallelReader {
    src: ParallelSource,
    tally: LoadTally,
    failed: bool,
}

impl ParallelReader {
    pub fn tally(&self) -> &LoadTally {
        &self.tally
    }

    fn new(src: ParallelSource) -> Self {
        Self {
            src,
            tally: LoadTally::default(),
            failed: false,
        }
    }

    fn next_raw(&mut self) -> Result<Option<RawRow>, CorpusError> {
        match &mut self.src {
            ParallelSource::TwoFiles { source, target } => {
                let (s, t) = (source.next_line()?, target.next_line()?);
                match (s, t) {
                    (None, None) => Ok(None),
                    (Some((line, s)), Some((_, t))) => {
                        let row = match (s, t) {
                            (Line::Text(s), Line::Text(t)) => Ok((line.to_string(), s, t)),
                            _ => Err(RecordError::BadEncoding { line }),
                        };
                        Ok(Some((line, row)))
                    }
                    // Counts were checked at open; a file changed underneath us.
                    _ => Err(CorpusError::LineCountMismatch {
                        source_lines: source.line,
                        target_lines: target.line,
                    }),
                }
            }
            ParallelSource::Tsv(lines) => {
                let Some((line, text)) = lines.next_line()? else {
                    return Ok(None);
                };
                let Line::Text(text) = text else {
                    return Ok(Some((line, Err(RecordError::BadEncoding { line }))));
                };
                let cols: Vec<&str> = text.split('\t').collect();
                if cols.len() != 2 {
                    return Err(CorpusError::ColumnCount {
                        line,
                        found: cols.len(),
                    });
                }
                Ok(Some((
                    line,
                    Ok((line.to_string(), cols[0].to_string(), cols[1].to_string())),
                )))
            }
            ParallelSource::Jsonl(lines) => loop {
                let Some((line, text)) = lines.next_line()? else {
                    return Ok(None);
                };
                let Line::Text(text) = text else {
                    return Ok(Some((line, Err(RecordError::BadEncoding { line }))));
                };
                if text.trim().is_empty() {
                    continue;
                }
                let row = serde_json::from_str::<RawPair>(&text)
                    .map_err(|e| RecordError::Malformed {
                        line,
                        message: e.to_string(),
                    })
                    .and_then(|raw| {
                        let source = raw.source.ok_or(RecordError::MissingField {
                            line,
                            field: "source",
                        })?;
                        let target = raw.target.ok_or(RecordError::MissingField {
                            line,
                            field: "target",
                        })?;
                        Ok((raw.id.unwrap_or_else(|| line.to_string()), source, target))
                    });
                return Ok(Some((line, row)));
            },
        }
    }
}

impl Iterator for ParallelReader {
    type Item = Result<ParallelPair, CorpusError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        loop {
            let (line, row) = match self.next_raw() {
                Ok(Some(r)) => r,
                Ok(None) => return None,
                Err(e) => {
                    self.failed = true;
                    return Some(Err(e));
                }
            };
            let (id, source, target) = match row {
                Ok(r) => r,
                Err(e) => {
                    self.tally.skip(e);
                    continue;
                }
            };
            let pair = ParallelPair::new(id, &source, &target);
            if pair.source.token_len() == 0 || pair.target.token_len() == 0 {
                self.tally.skip(RecordError::EmptyLine { line });
                continue;
            }
            self.tally.records += 1;
            return Some(Ok(pair));
        }
    }
}

fn count_lines(path: &Path) -> Result<usize, CorpusError> {
    let mut reader = LineReader::open(path)?;
    let mut n = 0;
    while reader.next_line()?.is_some() {
        n += 1;
    }
    Ok(n)
}

/// Opens two line-aligned plain-text files. The line counts are compared
/// up front; a mismatch is fatal.
pub fn load_parallel_corpus(source: &Path, target: &Path) -> Result<ParallelReader, CorpusError> {
    let (source_lines, target_lines) = (count_lines(source)?, count_lines(target)?);
    if source_lines != target_lines {
        return Err(CorpusError::LineCountMismatch {
            source_lines,
            target_lines,
        });
    }
    Ok(ParallelReader::new(ParallelSource::TwoFiles {
        source: LineReader::open(source)?,
        target: LineReader::open(target)?,
    }))
}

/// Opens a two-column `source<TAB>target` file.
pub fn load_parallel_tsv(path: &Path) -> Result<ParallelReader, CorpusError> {
    Ok(ParallelReader::new(ParallelSource::Tsv(LineReader::open(
        path,
    )?)))
}

/// Opens a JSON Lines pair file (`{"source", "target"}` per line), such as
/// the mined dataset.
pub fn load_pair_jsonl(path: &Path) -> Result<ParallelReader, CorpusError> {
    Ok(ParallelReader::new(ParallelSource::Jsonl(
        LineReader::open(path)?,
    )))
}
