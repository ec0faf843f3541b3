//! Text analysis: tokenize, lowercase, drop stopwords, stem.
//!
//! Tokens are maximal runs of alphanumeric code points. Positions are assigned
//! before stopword filtering, so removed stopwords leave gaps.

mod porter;

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use porter::porter_stem;

const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords_en.txt");

/// One analyzed (or raw) token and the ordinal of its source run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub term: String,
    pub position: u32,
}

impl Token {
    fn new(term: impl Into<String>, position: u32) -> Self {
        Token {
            term: term.into(),
            position,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum StemmerKind {
    None,
    #[default]
    Porter,
}

impl std::str::FromStr for StemmerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(StemmerKind::None),
            "porter" => Ok(StemmerKind::Porter),
            other => Err(Error::InvalidArgument(format!(
                "unknown stemmer `{other}` (expected porter or none)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzerConfig {
    pub lowercase: bool,
    pub stopwords: BTreeSet<String>,
    pub stem: StemmerKind,
}

impl Default for AnalyzerConfig {
    fn default() -> Self {
        AnalyzerConfig {
            lowercase: true,
            stopwords: default_stopwords(),
            stem: StemmerKind::Porter,
        }
    }
}

impl AnalyzerConfig {
    /// Lowercasing only: no stopwords, no stemming.
    pub fn plain() -> Self {
        AnalyzerConfig {
            lowercase: true,
            stopwords: BTreeSet::new(),
            stem: StemmerKind::None,
        }
    }

    pub fn analyze(&self, text: &str) -> Vec<Token> {
        analyze(text, self)
    }
}

/// Splits `text` into maximal alphanumeric runs, numbered from 0.
pub fn tokenize(text: &str) -> Vec<Token> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|run| !run.is_empty())
        .enumerate()
        .map(|(i, run)| Token::new(run, i as u32))
        .collect()
}

pub fn analyze(text: &str, config: &AnalyzerConfig) -> Vec<Token> {
    tokenize(text)
        .into_iter()
        .filter_map(|tok| {
            let term = if config.lowercase {
                tok.term.to_lowercase()
            } else {
                tok.term
            };
            if config.stopwords.contains(&term) {
                return None;
            }
            let term = match config.stem {
                StemmerKind::Porter => porter_stem(&term),
                StemmerKind::None => term,
            };
            Some(Token::new(term, tok.position))
        })
        .collect()
}

pub fn default_stopwords() -> BTreeSet<String> {
    parse_stopwords(DEFAULT_STOPWORDS)
}

/// Reads a stopword file: one word per line, `#` starts a comment.
pub fn load_stopwords(path: impl AsRef<Path>) -> Result<BTreeSet<String>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_stopwords(&text))
}

/// Resolves a stopword argument: `default`, `none`, or a file path.
pub fn resolve_stopwords(arg: &str) -> Result<BTreeSet<String>> {
    match arg {
        "default" => Ok(default_stopwords()),
        "none" => Ok(BTreeSet::new()),
        path => load_stopwords(path),
    }
}

fn parse_stopwords(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(|line| line.split('#').next().unwrap_or("").trim())
        .filter(|word| !word.is_empty())
        .map(str::to_owned)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pairs(tokens: &[Token]) -> Vec<(&str, u32)> {
        tokens.iter().map(|t| (t.term.as_str(), t.position)).collect()
    }

    #[test]
    fn tokenize_splits_on_non_alphanumerics() {
        assert_eq!(
            pairs(&tokenize("what is a lobster roll?")),
            [("what", 0), ("is", 1), ("a", 2), ("lobster", 3), ("roll", 4)]
        );
        assert!(tokenize("").is_empty());
        assert_eq!(
            pairs(&tokenize("B2B e-commerce")),
            [("B2B", 0), ("e", 1), ("commerce", 2)]
        );
    }

    #[test]
    fn analyze_with_defaults() {
        let cfg = AnalyzerConfig::default();
        assert_eq!(pairs(&analyze("atomic", &cfg)), [("atom", 0)]);
        assert!(analyze("a the of", &cfg).is_empty());
        assert_eq!(
            pairs(&analyze("Atomic ENERGY commissions", &cfg)),
            [("atom", 0), ("energi", 1), ("commiss", 2)]
        );
    }

    #[test]
    fn stopwords_leave_position_gaps() {
        let cfg = AnalyzerConfig::default();
        assert_eq!(pairs(&analyze("the cat in the hat", &cfg)), [("cat", 1), ("hat", 4)]);
    }

    #[test]
    fn stopwords_filtered_after_lowercasing() {
        let cfg = AnalyzerConfig::default();
        assert!(analyze("THE Of", &cfg).is_empty());
        let no_lower = AnalyzerConfig {
            lowercase: false,
            ..AnalyzerConfig::default()
        };
        assert_eq!(pairs(&analyze("THE", &no_lower)), [("THE", 0)]);
    }

    #[test]
    fn stopwords_filtered_before_stemming() {
        // "thes" stems to "the", which must survive because filtering
        // happened on the unstemmed form.
        let cfg = AnalyzerConfig::default();
        assert_eq!(porter_stem("thes"), "the");
        assert_eq!(pairs(&analyze("thes", &cfg)), [("the", 0)]);
    }

    #[test]
    fn default_list_has_33_words() {
        let words = default_stopwords();
        assert_eq!(words.len(), 33);
        assert!(words.contains("the") && words.contains("with"));
    }

    #[test]
    fn stopword_file_ignores_comments() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stop.txt");
        std::fs::write(&path, "# header\nfoo\n  bar  # trailing\n\n").unwrap();
        let words = load_stopwords(&path).unwrap();
        assert_eq!(words.into_iter().collect::<Vec<_>>(), ["bar", "foo"]);
        assert!(load_stopwords(dir.path().join("missing")).is_err());
    }

    proptest! {
        #[test]
        fn positions_strictly_increase(text in "\\PC{0,80}") {
            for cfg in [AnalyzerConfig::default(), AnalyzerConfig::plain()] {
                let toks = analyze(&text, &cfg);
                prop_assert!(toks.windows(2).all(|w| w[0].position < w[1].position));
            }
        }

        #[test]
        fn analysis_is_deterministic(text in "[a-zA-Z0-9 ,.-]{0,80}") {
            let cfg = AnalyzerConfig::default();
            prop_assert_eq!(analyze(&text, &cfg), analyze(&text, &cfg));
        }

        #[test]
        fn analyze_equals_composed_pipeline(text in "[a-zA-Z0-9 ,.'-]{0,80}") {
            let cfg = AnalyzerConfig::default();
            let stops = default_stopwords();
            let expected: Vec<String> = tokenize(&text)
                .into_iter()
                .map(|t| t.term.to_lowercase())
                .filter(|t| !stops.contains(t))
                .map(|t| porter_stem(&t))
                .collect();
            let got: Vec<String> = analyze(&text, &cfg).into_iter().map(|t| t.term).collect();
            prop_assert_eq!(got, expected);
        }

        #[test]
        fn stemming_reaches_fixed_point_by_second_pass(word in "[a-z]{1,14}") {
            let once = porter_stem(&word);
            let twice = porter_stem(&once);
            let thrice = porter_stem(&twice);
            prop_assert_eq!(twice, thrice);
        }
    }
}
