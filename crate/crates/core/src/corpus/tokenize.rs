//! Word tokenizer.
//!
//! Splits on Unicode word boundaries (UAX #29), lowercases, keeps every
//! punctuation mark as its own token and detaches English clitics so that
//! `"Dubai's"` becomes `["dubai", "'s"]`.

use unicode_segmentation::UnicodeSegmentation;

/// Clitic suffixes split off the end of a word token. Longest first.
const CLITICS: &[&str] = &["n't", "'re", "'ve", "'ll", "'s", "'d", "'m"];

/// Tokenizes `raw` into lowercased word and punctuation tokens.
///
/// Never produces empty tokens; whitespace is dropped.
pub fn tokenize(raw: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for piece in raw.split_word_bounds() {
        if piece.chars().all(char::is_whitespace) {
            continue;
        }
        let lower = normalize_apostrophes(&piece.to_lowercase());
        if lower.chars().any(char::is_alphanumeric) {
            push_word(&mut tokens, lower);
        } else {
            // Runs of symbols become one token per char.
            tokens.extend(lower.chars().map(String::from));
        }
    }
    tokens
}

fn normalize_apostrophes(s: &str) -> String {
    s.replace('\u{2019}', "'")
}

fn push_word(tokens: &mut Vec<String>, word: String) {
    for clitic in CLITICS {
        if word.len() > clitic.len() && word.ends_with(clitic) {
            let stem = &word[..word.len() - clitic.len()];
            if stem.chars().any(char::is_alphanumeric) {
                tokens.push(stem.to_string());
                tokens.push((*clitic).to_string());
                return;
            }
        }
    }
    tokens.push(word);
}

/// True if the token carries at least one letter or digit.
pub fn is_word_token(token: &str) -> bool {
    token.chars().any(char::is_alphanumeric)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s)
    }

    #[test]
    fn punctuation_is_split_and_lowercased() {
        assert_eq!(toks("Hello, world."), vec!["hello", ",", "world", "."]);
    }

    #[test]
    fn empty_input() {
        assert!(toks("").is_empty());
        assert!(toks("   \n\t").is_empty());
    }

    #[test]
    fn possessive_clitic_detached() {
        assert_eq!(
            toks("Dubai's safe haven"),
            vec!["dubai", "'s", "safe", "haven"]
        );
        assert_eq!(toks("Dubai\u{2019}s"), vec!["dubai", "'s"]);
    }

    #[test]
    fn negation_clitic() {
        assert_eq!(toks("They don't know"), vec!["they", "do", "n't", "know"]);
    }

    #[test]
    fn numbers_stay_whole() {
        assert_eq!(
            toks("It cost 3.5 million."),
            vec!["it", "cost", "3.5", "million", "."]
        );
    }

    #[test]
    fn ellipsis_each_char() {
        assert_eq!(toks("Wait..."), vec!["wait", ".", ".", "."]);
    }

    #[test]
    fn no_empty_tokens_and_deterministic() {
        let s = "  \"Quoted\" -- text (with) brackets!?  ";
        let a = toks(s);
        assert!(a.iter().all(|t| !t.is_empty()));
        assert_eq!(a, toks(s));
    }

    #[test]
    fn word_token_predicate() {
        assert!(is_word_token("abc"));
        assert!(is_word_token("'s"));
        assert!(!is_word_token(","));
        assert!(!is_word_token("--"));
    }
}
