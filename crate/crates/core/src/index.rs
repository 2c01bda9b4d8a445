//! The tf-idf inverted index: construction, weighting, ranking of terms and
//! the versioned text persistence format.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::crawler::html;
use crate::text::{tokenize, StopwordList};

pub type DocId = u32;

const HEADER: &str = "ONTOSEARCH-INDEX v1";

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("empty corpus: an index needs at least one document")]
    EmptyCorpus,
    #[error("duplicate doc_id {0}")]
    DuplicateDocId(DocId),
    #[error("unknown doc_id {0}")]
    UnknownDoc(DocId),
    #[error("source uri of doc {0} contains a tab or newline")]
    InvalidUri(DocId),
    #[error("index file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn parse_err(line: usize, msg: impl Into<String>) -> IndexError {
    IndexError::Parse {
        line,
        msg: msg.into(),
    }
}

/// A document to be indexed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub doc_id: DocId,
    pub source_uri: String,
    pub text: String,
}

impl Document {
    pub fn new(doc_id: DocId, source_uri: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            doc_id,
            source_uri: source_uri.into(),
            text: text.into(),
        }
    }

    pub fn token_count(&self, stopwords: &StopwordList) -> usize {
        tokenize(&self.text, stopwords).len()
    }
}

/// The per-document row kept in a built index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DocEntry {
    pub doc_id: DocId,
    pub source_uri: String,
    pub token_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub doc_id: DocId,
    pub tf: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct TermEntry {
    // sorted by doc_id; df == postings.len()
    postings: Vec<Posting>,
}

/// An immutable tf-idf inverted index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TfIdfIndex {
    docs: Vec<DocEntry>,
    vocab: BTreeMap<String, TermEntry>,
}

impl TfIdfIndex {
    /// Builds an index from `docs`. Documents are tokenized in parallel; the
    /// result does not depend on the order of `docs`.
    pub fn build(docs: &[Document], stopwords: &StopwordList) -> Result<Self, IndexError> {
        if docs.is_empty() {
            return Err(IndexError::EmptyCorpus);
        }
        let mut seen = HashSet::with_capacity(docs.len());
        for doc in docs {
            if !seen.insert(doc.doc_id) {
                return Err(IndexError::DuplicateDocId(doc.doc_id));
            }
        }

        let counted: Vec<(DocEntry, BTreeMap<String, u32>)> = docs
            .par_iter()
            .map(|doc| {
                let tokens = tokenize(&doc.text, stopwords);
                let mut counts = BTreeMap::new();
                for tok in &tokens {
                    *counts.entry(tok.clone()).or_insert(0u32) += 1;
                }
                let entry = DocEntry {
                    doc_id: doc.doc_id,
                    source_uri: doc.source_uri.clone(),
                    token_count: tokens.len(),
                };
                (entry, counts)
            })
            .collect();

        let mut vocab: BTreeMap<String, TermEntry> = BTreeMap::new();
        let mut entries = Vec::with_capacity(counted.len());
        for (entry, counts) in counted {
            for (term, tf) in counts {
                vocab
                    .entry(term)
                    .or_insert_with(|| TermEntry {
                        postings: Vec::new(),
                    })
                    .postings
                    .push(Posting {
                        doc_id: entry.doc_id,
                        tf,
                    });
            }
            entries.push(entry);
        }
        entries.sort_by_key(|d| d.doc_id);
        for term in vocab.values_mut() {
            term.postings.sort_by_key(|p| p.doc_id);
        }
        Ok(Self {
            docs: entries,
            vocab,
        })
    }

    /// Total number of documents (N).
    pub fn n_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn vocab_len(&self) -> usize {
        self.vocab.len()
    }

    /// Documents in ascending doc_id order.
    pub fn documents(&self) -> &[DocEntry] {
        &self.docs
    }

    pub fn document(&self, doc_id: DocId) -> Option<&DocEntry> {
        self.docs
            .binary_search_by_key(&doc_id, |d| d.doc_id)
            .ok()
            .map(|i| &self.docs[i])
    }

    pub fn contains_doc(&self, doc_id: DocId) -> bool {
        self.document(doc_id).is_some()
    }

    /// Vocabulary terms in lexicographic order.
    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.vocab.keys().map(String::as_str)
    }

    pub fn contains_term(&self, term: &str) -> bool {
        self.vocab.contains_key(term)
    }

    /// Document frequency; 0 for terms outside the vocabulary.
    pub fn df(&self, term: &str) -> usize {
        self.vocab.get(term).map_or(0, |t| t.postings.len())
    }

    /// Postings of `term` sorted by doc_id.
    pub fn postings(&self, term: &str) -> &[Posting] {
        self.vocab.get(term).map_or(&[], |t| &t.postings)
    }

    pub fn tf(&self, term: &str, doc_id: DocId) -> u32 {
        let postings = self.postings(term);
        postings
            .binary_search_by_key(&doc_id, |p| p.doc_id)
            .map_or(0, |i| postings[i].tf)
    }

    /// Inverse document frequency `ln(N / df)`; 0 for unknown terms.
    pub fn idf(&self, term: &str) -> f64 {
        match self.df(term) {
            0 => 0.0,
            df => (self.n_docs() as f64 / df as f64).ln(),
        }
    }

    /// `tf · ln(N / df)` for `term` in `doc_id`.
    pub fn tfidf(&self, term: &str, doc_id: DocId) -> Result<f64, IndexError> {
        if !self.contains_doc(doc_id) {
            return Err(IndexError::UnknownDoc(doc_id));
        }
        let tf = self.tf(term, doc_id);
        if tf == 0 {
            return Ok(0.0);
        }
        Ok(tf as f64 * self.idf(term))
    }

    /// Sum of tf-idf over all documents for a single term.
    pub fn aggregate_weight(&self, term: &str) -> f64 {
        let idf = self.idf(term);
        self.postings(term)
            .iter()
            .map(|p| p.tf as f64 * idf)
            .sum()
    }

    /// The `limit` terms with the largest aggregate tf-idf, descending, ties
    /// broken lexicographically.
    pub fn top_terms(&self, limit: usize) -> Vec<(String, f64)> {
        let mut ranked: Vec<(String, f64)> = self
            .vocab
            .keys()
            .map(|term| (term.clone(), self.aggregate_weight(term)))
            .collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(limit);
        ranked
    }

    /// Serializes to the `ONTOSEARCH-INDEX v1` text format.
    pub fn to_text(&self) -> Result<String, IndexError> {
        let mut out = String::new();
        out.push_str(HEADER);
        out.push('\n');
        out.push_str("#DOCS\n");
        for d in &self.docs {
            if d.source_uri.contains(['\t', '\n', '\r']) {
                return Err(IndexError::InvalidUri(d.doc_id));
            }
            let _ = writeln!(out, "{}\t{}\t{}", d.doc_id, d.source_uri, d.token_count);
        }
        out.push_str("#VOCAB\n");
        for (term, entry) in &self.vocab {
            let _ = writeln!(out, "{term}\t{}", entry.postings.len());
        }
        out.push_str("#POSTINGS\n");
        for (term, entry) in &self.vocab {
            for p in &entry.postings {
                let _ = writeln!(out, "{term}\t{}\t{}", p.doc_id, p.tf);
            }
        }
        Ok(out)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), IndexError> {
        fs::write(path, self.to_text()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, IndexError> {
        Self::from_text(&fs::read_to_string(path)?)
    }

    /// Parses and validates the text format. Every section must be sorted and
    /// the vocabulary's df must agree with the postings.
    pub fn from_text(text: &str) -> Result<Self, IndexError> {
        #[derive(PartialEq, PartialOrd)]
        enum Section {
            None,
            Docs,
            Vocab,
            Postings,
        }

        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        match lines.next() {
            Some((_, HEADER)) => {}
            _ => return Err(parse_err(1, format!("expected header `{HEADER}`"))),
        }

        let mut section = Section::None;
        let mut docs: Vec<DocEntry> = Vec::new();
        let mut declared_df: Vec<(String, usize, usize)> = Vec::new();
        let mut vocab: BTreeMap<String, TermEntry> = BTreeMap::new();
        let mut last_posting: Option<(String, DocId)> = None;

        for (lineno, line) in lines {
            let next = match line {
                "#DOCS" => Some(Section::Docs),
                "#VOCAB" => Some(Section::Vocab),
                "#POSTINGS" => Some(Section::Postings),
                _ => None,
            };
            if let Some(next) = next {
                if next <= section {
                    return Err(parse_err(lineno, "section out of order"));
                }
                section = next;
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            match section {
                Section::None => return Err(parse_err(lineno, "data before #DOCS")),
                Section::Docs => {
                    let [id, uri, count] = fields[..] else {
                        return Err(parse_err(lineno, "expected doc_id, source_uri, token_count"));
                    };
                    let doc_id = parse_num(id, lineno)?;
                    if docs.last().is_some_and(|d| d.doc_id >= doc_id) {
                        return Err(parse_err(lineno, "doc ids not strictly ascending"));
                    }
                    docs.push(DocEntry {
                        doc_id,
                        source_uri: uri.to_owned(),
                        token_count: parse_num(count, lineno)?,
                    });
                }
                Section::Vocab => {
                    let [term, df] = fields[..] else {
                        return Err(parse_err(lineno, "expected term, df"));
                    };
                    if declared_df.last().is_some_and(|(t, _, _)| t.as_str() >= term) {
                        return Err(parse_err(lineno, "vocabulary not strictly sorted"));
                    }
                    let df: usize = parse_num(df, lineno)?;
                    if df == 0 {
                        return Err(parse_err(lineno, "df must be at least 1"));
                    }
                    declared_df.push((term.to_owned(), df, lineno));
                }
                Section::Postings => {
                    let [term, id, tf] = fields[..] else {
                        return Err(parse_err(lineno, "expected term, doc_id, tf"));
                    };
                    let doc_id: DocId = parse_num(id, lineno)?;
                    let tf: u32 = parse_num(tf, lineno)?;
                    if tf == 0 {
                        return Err(parse_err(lineno, "tf must be at least 1"));
                    }
                    if let Some((t, d)) = &last_posting {
                        if (t.as_str(), *d) >= (term, doc_id) {
                            return Err(parse_err(lineno, "postings not strictly sorted"));
                        }
                    }
                    if docs.binary_search_by_key(&doc_id, |d| d.doc_id).is_err() {
                        return Err(parse_err(lineno, format!("posting for unknown doc {doc_id}")));
                    }
                    vocab
                        .entry(term.to_owned())
                        .or_insert_with(|| TermEntry {
                            postings: Vec::new(),
                        })
                        .postings
                        .push(Posting { doc_id, tf });
                    last_posting = Some((term.to_owned(), doc_id));
                }
            }
        }

        if section != Section::Postings {
            return Err(parse_err(text.lines().count(), "missing section"));
        }
        if docs.is_empty() {
            return Err(IndexError::EmptyCorpus);
        }
        if declared_df.len() != vocab.len() {
            return Err(parse_err(
                text.lines().count(),
                "vocabulary and postings disagree on the term set",
            ));
        }
        for (term, df, lineno) in &declared_df {
            match vocab.get(term) {
                Some(entry) if entry.postings.len() == *df => {}
                _ => return Err(parse_err(*lineno, format!("df of `{term}` disagrees with postings"))),
            }
        }
        let index = Self { docs, vocab };
        for doc in &index.docs {
            let total: u64 = index
                .vocab
                .values()
                .filter_map(|t| {
                    t.postings
                        .binary_search_by_key(&doc.doc_id, |p| p.doc_id)
                        .ok()
                        .map(|i| t.postings[i].tf as u64)
                })
                .sum();
            if total != doc.token_count as u64 {
                return Err(parse_err(
                    1,
                    format!("token_count of doc {} disagrees with postings", doc.doc_id),
                ));
            }
        }
        Ok(index)
    }
}

fn parse_num<T: std::str::FromStr>(field: &str, line: usize) -> Result<T, IndexError> {
    field
        .parse()
        .map_err(|_| parse_err(line, format!("`{field}` is not a valid number")))
}

/// Reads a corpus directory: every `.txt` file is one document, and `.html`
/// or `.htm` files are reduced to their text. Doc ids follow file-name order.
pub fn load_corpus_dir(dir: impl AsRef<Path>) -> io::Result<Vec<Document>> {
    let mut files: Vec<_> = fs::read_dir(dir)?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.is_file())
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()),
                Some("txt" | "html" | "htm")
            )
        })
        .collect();
    files.sort();

    let mut docs = Vec::with_capacity(files.len());
    for (i, path) in files.iter().enumerate() {
        let raw = fs::read_to_string(path)?;
        let text = match path.extension().and_then(|e| e.to_str()) {
            Some("txt") => raw,
            _ => html::extract_text(&raw),
        };
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        docs.push(Document::new(i as DocId, name, text));
    }
    Ok(docs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(texts: &[&str]) -> TfIdfIndex {
        let docs: Vec<_> = texts
            .iter()
            .enumerate()
            .map(|(i, t)| Document::new(i as DocId, format!("d{i}.txt"), *t))
            .collect();
        TfIdfIndex::build(&docs, &StopwordList::empty()).unwrap()
    }

    #[test]
    fn single_doc_counts() {
        let index = idx(&["cancer cancer lump"]);
        assert_eq!(index.n_docs(), 1);
        assert_eq!(index.df("cancer"), 1);
        assert_eq!(index.df("lump"), 1);
        assert_eq!(index.tf("cancer", 0), 2);
        assert_eq!(index.tf("lump", 0), 1);
        assert_eq!(index.documents()[0].token_count, 3);
    }

    #[test]
    fn two_docs() {
        let index = idx(&["cancer", "lump"]);
        assert_eq!((index.df("cancer"), index.df("lump"), index.n_docs()), (1, 1, 2));
    }

    #[test]
    fn empty_corpus_rejected() {
        assert!(matches!(
            TfIdfIndex::build(&[], &StopwordList::empty()),
            Err(IndexError::EmptyCorpus)
        ));
    }

    #[test]
    fn duplicate_doc_id_named() {
        let docs = [Document::new(3, "a", "x1"), Document::new(3, "b", "y2")];
        match TfIdfIndex::build(&docs, &StopwordList::empty()) {
            Err(IndexError::DuplicateDocId(3)) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn tfidf_values() {
        let index = idx(&["cancer lump", "cancer"]);
        assert_eq!(index.tfidf("cancer", 0).unwrap(), 0.0);
        assert_eq!(index.tfidf("lump", 1).unwrap(), 0.0);
        assert_eq!(index.tfidf("zodiac", 0).unwrap(), 0.0);
        assert!((index.tfidf("lump", 0).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!(matches!(index.tfidf("lump", 9), Err(IndexError::UnknownDoc(9))));
    }

    #[test]
    fn tfidf_three_of_eight() {
        // tf=3 in doc 0, df=2, N=8
        let mut texts = vec!["onco onco onco", "onco"];
        texts.extend(["filler"; 6]);
        let index = idx(&texts);
        let w = index.tfidf("onco", 0).unwrap();
        assert!((w - 3.0 * 4f64.ln()).abs() < 1e-9);
        assert!((w - 4.158883).abs() < 1e-6);
    }

    #[test]
    fn top_terms_ties_are_lexicographic() {
        let index = idx(&["beta alpha", "gamma"]);
        let top = index.top_terms(10);
        let names: Vec<_> = top.iter().map(|(t, _)| t.as_str()).collect();
        assert_eq!(names, ["alpha", "beta", "gamma"]);
        assert_eq!(index.top_terms(1).len(), 1);
    }

    #[test]
    fn top_terms_single_nonzero() {
        let index = idx(&["cancer lump", "lump"]);
        let top = index.top_terms(1);
        assert_eq!(top[0].0, "cancer");
        assert!(top[0].1 > 0.0);
    }

    #[test]
    fn persistence_round_trip() {
        let index = idx(&["cancer cancer lump", "cell biology", "cancer cell"]);
        let text = index.to_text().unwrap();
        assert!(text.starts_with("ONTOSEARCH-INDEX v1\n#DOCS\n0\td0.txt\t3\n"));
        let back = TfIdfIndex::from_text(&text).unwrap();
        assert_eq!(back, index);
        assert_eq!(back.to_text().unwrap(), text);
    }

    #[test]
    fn load_rejects_inconsistent_df() {
        let text = "ONTOSEARCH-INDEX v1\n#DOCS\n0\ta\t1\n#VOCAB\nlump\t2\n#POSTINGS\nlump\t0\t1\n";
        let err = TfIdfIndex::from_text(text).unwrap_err();
        assert!(matches!(err, IndexError::Parse { line: 5, .. }), "{err}");
    }

    #[test]
    fn load_rejects_bad_header_and_order() {
        assert!(TfIdfIndex::from_text("nope\n").is_err());
        let unsorted = "ONTOSEARCH-INDEX v1\n#DOCS\n0\ta\t2\n#VOCAB\nlump\t1\nbeta\t1\n#POSTINGS\nbeta\t0\t1\nlump\t0\t1\n";
        assert!(matches!(
            TfIdfIndex::from_text(unsorted),
            Err(IndexError::Parse { line: 6, .. })
        ));
    }

    #[test]
    fn uri_with_tab_cannot_be_saved() {
        let docs = [Document::new(0, "a\tb", "lump")];
        let index = TfIdfIndex::build(&docs, &StopwordList::empty()).unwrap();
        assert!(matches!(index.to_text(), Err(IndexError::InvalidUri(0))));
    }
}
