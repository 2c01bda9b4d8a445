//! Tokenization and stopword handling shared by indexing, querying and
//! sense disambiguation.

use std::collections::HashSet;
use std::fs;
use std::io;
use std::path::Path;

const DEFAULT_ENGLISH: &str = include_str!("../data/stopwords_en.txt");

/// A set of lowercase words removed during tokenization.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StopwordList {
    words: HashSet<String>,
}

impl StopwordList {
    pub fn empty() -> Self {
        Self::default()
    }

    /// The bundled English list (a little over 100 function words).
    pub fn default_english() -> Self {
        Self::parse(DEFAULT_ENGLISH)
    }

    /// Parses one word per line. Blank lines and `#` comments are skipped;
    /// words are lowercased.
    pub fn parse(contents: &str) -> Self {
        let words = contents
            .lines()
            .map(str::trim)
            .filter(|line| !line.is_empty() && !line.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        Self { words }
    }

    pub fn from_file(path: impl AsRef<Path>) -> io::Result<Self> {
        Ok(Self::parse(&fs::read_to_string(path)?))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

impl<S: Into<String>> FromIterator<S> for StopwordList {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self {
            words: iter.into_iter().map(|w| w.into().to_lowercase()).collect(),
        }
    }
}

/// Splits `text` into index terms.
///
/// The text is lowercased and split on every character that is not a letter
/// or digit. Tokens shorter than two characters, tokens without a letter and
/// stopwords are dropped. Order is preserved.
pub fn tokenize(text: &str, stopwords: &StopwordList) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|tok| keep_token(tok, stopwords))
        .map(str::to_owned)
        .collect()
}

fn keep_token(tok: &str, stopwords: &StopwordList) -> bool {
    tok.chars().nth(1).is_some()
        && tok.chars().any(char::is_alphabetic)
        && !stopwords.contains(tok)
}
