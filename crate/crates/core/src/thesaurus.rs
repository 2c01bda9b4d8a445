//! A small WordNet-style sense inventory.
//!
//! File format, one record per line (`#` starts a comment):
//!
//! ```text
//! SENSE <sense_id> WORDS <w1|w2|...> GLOSS <text>
//! HYPERNYM <child_id> <parent_id>
//! HYPONYM <parent_id> <child_id>
//! MERONYM <part_id> <whole_id>
//! ```
//!
//! The order of `SENSE` lines defines the order senses are listed in.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ThesaurusError {
    #[error("thesaurus line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown sense `{0}`")]
    UnknownSense(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn parse_err(line: usize, msg: impl Into<String>) -> ThesaurusError {
    ThesaurusError::Parse {
        line,
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Synset {
    pub sense_id: String,
    pub words: Vec<String>,
    pub gloss: String,
    pub hypernyms: Vec<String>,
    pub hyponyms: Vec<String>,
    /// Parts of this sense.
    pub meronyms: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LexicalRelation {
    Synonym,
    Hyponym,
    Hypernym,
    Meronym,
}

impl LexicalRelation {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Synonym => "synonym",
            Self::Hyponym => "hyponym",
            Self::Hypernym => "hypernym",
            Self::Meronym => "meronym",
        }
    }
}

impl fmt::Display for LexicalRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A lemma one hop away from a sense.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Neighbor {
    pub lemma: String,
    pub weight: f64,
    pub relation: LexicalRelation,
}

pub const SYNONYM_WEIGHT: f64 = 1.0;
pub const ONE_HOP_WEIGHT: f64 = 0.5;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Thesaurus {
    senses: Vec<Synset>,
    by_id: HashMap<String, usize>,
    lemma_index: HashMap<String, Vec<usize>>,
    max_phrase_words: usize,
}

/// Lowercases and collapses internal whitespace.
pub fn normalize_lemma(lemma: &str) -> String {
    lemma
        .split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

impl Thesaurus {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ThesaurusError> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self, ThesaurusError> {
        let mut senses: Vec<Synset> = Vec::new();
        let mut by_id: HashMap<String, usize> = HashMap::new();
        // (child, parent, line) and (part, whole, line)
        let mut is_a: Vec<(String, String, usize)> = Vec::new();
        let mut part_of: Vec<(String, String, usize)> = Vec::new();

        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (keyword, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            let rest = rest.trim();
            match keyword {
                "SENSE" => {
                    let synset = parse_sense(rest, lineno)?;
                    if by_id.contains_key(&synset.sense_id) {
                        return Err(parse_err(
                            lineno,
                            format!("duplicate sense id `{}`", synset.sense_id),
                        ));
                    }
                    by_id.insert(synset.sense_id.clone(), senses.len());
                    senses.push(synset);
                }
                "HYPERNYM" | "HYPONYM" | "MERONYM" => {
                    let fields: Vec<&str> = rest.split_whitespace().collect();
                    let [a, b] = fields[..] else {
                        return Err(parse_err(lineno, format!("{keyword} takes two sense ids")));
                    };
                    if a == b {
                        return Err(parse_err(lineno, format!("sense `{a}` links to itself")));
                    }
                    let (a, b) = (a.to_owned(), b.to_owned());
                    match keyword {
                        "HYPERNYM" => is_a.push((a, b, lineno)),
                        "HYPONYM" => is_a.push((b, a, lineno)),
                        _ => part_of.push((a, b, lineno)),
                    }
                }
                other => return Err(parse_err(lineno, format!("unknown record `{other}`"))),
            }
        }

        let resolve = |id: &str, line: usize| {
            by_id
                .get(id)
                .copied()
                .ok_or_else(|| parse_err(line, format!("reference to undefined sense `{id}`")))
        };

        let mut parents: Vec<Vec<(usize, usize)>> = vec![Vec::new(); senses.len()];
        for (child, parent, line) in &is_a {
            let (c, p) = (resolve(child, *line)?, resolve(parent, *line)?);
            if !parents[c].iter().any(|&(q, _)| q == p) {
                parents[c].push((p, *line));
            }
        }
        check_acyclic(&parents)?;

        let mut hypernyms = vec![Vec::new(); senses.len()];
        let mut hyponyms = vec![Vec::new(); senses.len()];
        for (c, ps) in parents.iter().enumerate() {
            for &(p, _) in ps {
                hypernyms[c].push(p);
                hyponyms[p].push(c);
            }
        }
        let mut meronyms = vec![Vec::new(); senses.len()];
        for (part, whole, line) in &part_of {
            let (p, w) = (resolve(part, *line)?, resolve(whole, *line)?);
            if !meronyms[w].contains(&p) {
                meronyms[w].push(p);
            }
        }

        let ids: Vec<String> = senses.iter().map(|s| s.sense_id.clone()).collect();
        let to_ids = |mut positions: Vec<usize>| {
            positions.sort_unstable();
            positions.into_iter().map(|i| ids[i].clone()).collect()
        };
        for (i, synset) in senses.iter_mut().enumerate() {
            synset.hypernyms = to_ids(std::mem::take(&mut hypernyms[i]));
            synset.hyponyms = to_ids(std::mem::take(&mut hyponyms[i]));
            synset.meronyms = to_ids(std::mem::take(&mut meronyms[i]));
        }

        let mut lemma_index: HashMap<String, Vec<usize>> = HashMap::new();
        let mut max_phrase_words = 0;
        for (i, synset) in senses.iter().enumerate() {
            for word in &synset.words {
                max_phrase_words = max_phrase_words.max(word.split(' ').count());
                let entry = lemma_index.entry(word.clone()).or_default();
                if entry.last() != Some(&i) {
                    entry.push(i);
                }
            }
        }

        Ok(Self {
            senses,
            by_id,
            lemma_index,
            max_phrase_words,
        })
    }

    /// Canonical serialization: senses in file order, then is-a links, then
    /// part-of links.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.senses {
            let _ = writeln!(out, "SENSE {} WORDS {} GLOSS {}", s.sense_id, s.words.join("|"), s.gloss);
        }
        for s in &self.senses {
            for parent in &s.hypernyms {
                let _ = writeln!(out, "HYPERNYM {} {parent}", s.sense_id);
            }
        }
        for s in &self.senses {
            for part in &s.meronyms {
                let _ = writeln!(out, "MERONYM {part} {}", s.sense_id);
            }
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ThesaurusError> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.senses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.senses.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Synset> {
        self.senses.iter()
    }

    pub fn get(&self, sense_id: &str) -> Option<&Synset> {
        self.by_id.get(sense_id).map(|&i| &self.senses[i])
    }

    /// Position of a sense in file order.
    pub fn position(&self, sense_id: &str) -> Option<usize> {
        self.by_id.get(sense_id).copied()
    }

    /// Senses containing `lemma`, in file order.
    pub fn senses(&self, lemma: &str) -> Vec<&Synset> {
        self.lemma_index
            .get(&normalize_lemma(lemma))
            .map(|ids| ids.iter().map(|&i| &self.senses[i]).collect())
            .unwrap_or_default()
    }

    /// Longest lemma, in words.
    pub fn max_phrase_words(&self) -> usize {
        self.max_phrase_words
    }

    /// Synonyms at weight 1.0, then lemmas of direct hyponyms, hypernyms and
    /// meronyms at weight 0.5. `source_lemma` is excluded and repeated lemmas
    /// keep their highest weight.
    pub fn neighborhood(&self, sense_id: &str, source_lemma: &str) -> Result<Vec<Neighbor>, ThesaurusError> {
        let synset = self
            .get(sense_id)
            .ok_or_else(|| ThesaurusError::UnknownSense(sense_id.to_owned()))?;
        let source = normalize_lemma(source_lemma);
        let mut out: Vec<Neighbor> = Vec::new();
        let mut add = |lemma: &str, weight: f64, relation: LexicalRelation| {
            if lemma == source {
                return;
            }
            match out.iter_mut().find(|n| n.lemma == lemma) {
                Some(n) if n.weight < weight => {
                    n.weight = weight;
                    n.relation = relation;
                }
                Some(_) => {}
                None => out.push(Neighbor {
                    lemma: lemma.to_owned(),
                    weight,
                    relation,
                }),
            }
        };

        for w in &synset.words {
            add(w, SYNONYM_WEIGHT, LexicalRelation::Synonym);
        }
        let hops = [
            (&synset.hyponyms, LexicalRelation::Hyponym),
            (&synset.hypernyms, LexicalRelation::Hypernym),
            (&synset.meronyms, LexicalRelation::Meronym),
        ];
        for (ids, relation) in hops {
            for id in ids {
                for w in &self.senses[self.by_id[id]].words {
                    add(w, ONE_HOP_WEIGHT, relation);
                }
            }
        }
        Ok(out)
    }
}

fn parse_sense(rest: &str, line: usize) -> Result<Synset, ThesaurusError> {
    let (id, rest) = rest
        .split_once(char::is_whitespace)
        .ok_or_else(|| parse_err(line, "SENSE needs an id, WORDS and GLOSS"))?;
    let rest = rest.trim_start();
    let body = rest
        .strip_prefix("WORDS")
        .filter(|b| b.starts_with(char::is_whitespace))
        .ok_or_else(|| parse_err(line, "expected WORDS after the sense id"))?;
    let (words, gloss) = match body.find(" GLOSS") {
        Some(at) => (&body[..at], body[at + " GLOSS".len()..].trim()),
        None => return Err(parse_err(line, "missing GLOSS")),
    };
    let mut lemmas: Vec<String> = Vec::new();
    for w in words.split('|') {
        let lemma = normalize_lemma(w);
        if lemma.is_empty() {
            return Err(parse_err(line, "empty lemma in WORDS"));
        }
        if !lemmas.contains(&lemma) {
            lemmas.push(lemma);
        }
    }
    Ok(Synset {
        sense_id: id.to_owned(),
        words: lemmas,
        gloss: gloss.to_owned(),
        hypernyms: Vec::new(),
        hyponyms: Vec::new(),
        meronyms: Vec::new(),
    })
}

fn check_acyclic(parents: &[Vec<(usize, usize)>]) -> Result<(), ThesaurusError> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Open,
        Done,
    }
    let mut mark = vec![Mark::New; parents.len()];
    for start in 0..parents.len() {
        if mark[start] != Mark::New {
            continue;
        }
        // (node, next parent slot)
        let mut stack = vec![(start, 0usize)];
        mark[start] = Mark::Open;
        while let Some(&mut (node, ref mut slot)) = stack.last_mut() {
            if let Some(&(parent, line)) = parents[node].get(*slot) {
                *slot += 1;
                match mark[parent] {
                    Mark::Open => return Err(parse_err(line, "cycle in hypernym graph")),
                    Mark::New => {
                        mark[parent] = Mark::Open;
                        stack.push((parent, 0));
                    }
                    Mark::Done => {}
                }
            } else {
                mark[node] = Mark::Done;
                stack.pop();
            }
        }
    }
    Ok(())
}
