//! Rule-based sentence splitter for raw document text.
//!
//! A boundary is a run of `.`, `!` or `?` (plus any closing quotes or
//! brackets) followed by whitespace and an upper-case letter, optionally
//! behind an opening quote. A period after a known abbreviation or a single
//! letter initial is never a boundary.

use super::SentenceRecord;

const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "mt", "gen", "col", "lt", "sgt", "capt",
    "cmdr", "adm", "rep", "sen", "gov", "pres", "rev", "hon", "supt", "det", "insp", "inc", "ltd",
    "co", "corp", "bros", "vs", "etc", "approx", "dept", "est", "fig", "no", "nos", "vol", "jan",
    "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec", "mon", "tue",
    "wed", "thu", "fri", "sat", "sun", "e.g", "i.e", "u.s", "u.k", "u.n", "a.m", "p.m", "ph.d",
];

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '\u{201d}' | '\u{2019}')
}

fn is_opener(c: char) -> bool {
    matches!(c, '"' | '\'' | '(' | '[' | '\u{201c}' | '\u{2018}')
}

/// Splits `text` into trimmed sentence strings, in order. Blank input yields
/// an empty list.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;

    while i < chars.len() {
        let (_, c) = chars[i];
        if !is_terminal(c) {
            i += 1;
            continue;
        }
        let term_pos = i;
        let mut j = i + 1;
        while j < chars.len() && (is_terminal(chars[j].1) || is_closer(chars[j].1)) {
            j += 1;
        }
        // j is one past the punctuation run.
        let mut k = j;
        while k < chars.len() && chars[k].1.is_whitespace() {
            k += 1;
        }
        let has_space = k > j;
        let mut m = k;
        while m < chars.len() && is_opener(chars[m].1) {
            m += 1;
        }
        let next_upper = m < chars.len() && chars[m].1.is_uppercase();

        let boundary = has_space
            && next_upper
            && !(c == '.' && j == term_pos + 1 && is_abbreviation(text, chars[term_pos].0));
        if boundary {
            let end = if j < chars.len() {
                chars[j].0
            } else {
                text.len()
            };
            push_trimmed(&mut out, &text[start..end]);
            start = chars[k].0;
            i = k;
        } else {
            i = j;
        }
    }
    push_trimmed(&mut out, &text[start..]);
    out
}

fn push_trimmed<'a>(out: &mut Vec<&'a str>, s: &'a str) {
    let t = s.trim();
    if !t.is_empty() {
        out.push(t);
    }
}

/// Checks the word ending right before the period at byte offset `dot`.
fn is_abbreviation(text: &str, dot: usize) -> bool {
    let before = &text[..dot];
    let word_start = before
        .char_indices()
        .rev()
        .find(|&(_, c)| c.is_whitespace() || is_opener(c))
        .map(|(idx, c)| idx + c.len_utf8())
        .unwrap_or(0);
    let original = &before[word_start..];
    let mut chars = original.chars();
    // Single-letter initials ("J. Smith").
    if let (Some(c), None) = (chars.next(), chars.next()) {
        if c.is_uppercase() {
            return true;
        }
    }
    ABBREVIATIONS.contains(&original.to_lowercase().as_str())
}

/// Segments a raw block into sentence records with ids `{prefix}{index}`.
///
/// Sentences that tokenize to nothing are dropped; the index counts only
/// kept sentences so ids stay dense.
pub fn segment_sentences(prefix: &str, raw_block: &str) -> Vec<SentenceRecord> {
    records_from_strings(prefix, split_sentences(raw_block))
}

/// Builds records from already-segmented sentence strings.
pub fn records_from_strings<'a, I>(prefix: &str, sentences: I) -> Vec<SentenceRecord>
where
    I: IntoIterator<Item = &'a str>,
{
    sentences
        .into_iter()
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| SentenceRecord::new(String::new(), s))
        .filter(|r| r.token_len() > 0)
        .enumerate()
        .map(|(i, r)| r.with_id(format!("{prefix}{i}")))
        .collect()
}
