use std::fmt::{self, Write as _};

use serde::Serialize;

use crate::ontology::OntologyGraph;
use crate::thesaurus::{LexicalRelation, Thesaurus};

use super::PipelineError;

/// Where an expansion term came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpansionTag {
    Synonym,
    Hyponym,
    Meronym,
    Hypernym,
    ConceptLabel,
    ConceptSynonym,
}

impl ExpansionTag {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Synonym => "synonym",
            Self::Hyponym => "hyponym",
            Self::Meronym => "meronym",
            Self::Hypernym => "hypernym",
            Self::ConceptLabel => "concept-label",
            Self::ConceptSynonym => "concept-synonym",
        }
    }
}

impl From<LexicalRelation> for ExpansionTag {
    fn from(r: LexicalRelation) -> Self {
        match r {
            LexicalRelation::Synonym => Self::Synonym,
            LexicalRelation::Hyponym => Self::Hyponym,
            LexicalRelation::Hypernym => Self::Hypernym,
            LexicalRelation::Meronym => Self::Meronym,
        }
    }
}

impl fmt::Display for ExpansionTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionTerm {
    pub term: String,
    pub weight: f64,
    pub tag: ExpansionTag,
}

/// The original query terms (weight 1) plus weighted expansion terms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnrichedQuery {
    pub original_terms: Vec<String>,
    pub expansion_terms: Vec<ExpansionTerm>,
    pub chosen_concept: Option<String>,
    pub chosen_sense: Option<String>,
}

impl EnrichedQuery {
    /// The query with no expansion. Repeated terms are kept once.
    pub fn identity(terms: &[String]) -> Self {
        let mut original_terms: Vec<String> = Vec::with_capacity(terms.len());
        for t in terms {
            if !original_terms.contains(t) {
                original_terms.push(t.clone());
            }
        }
        Self {
            original_terms,
            expansion_terms: Vec::new(),
            chosen_concept: None,
            chosen_sense: None,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.expansion_terms.is_empty()
    }

    /// Adds an expansion term unless it is an original term. A repeated term
    /// keeps its first position and the larger weight.
    pub(crate) fn add(&mut self, term: &str, weight: f64, tag: ExpansionTag) {
        if self.original_terms.iter().any(|t| t == term) {
            return;
        }
        match self.expansion_terms.iter_mut().find(|e| e.term == term) {
            Some(e) if e.weight < weight => {
                e.weight = weight;
                e.tag = tag;
            }
            Some(_) => {}
            None => self.expansion_terms.push(ExpansionTerm {
                term: term.to_owned(),
                weight,
                tag,
            }),
        }
    }

    /// Every term with its weight: originals at 1.0 first, then expansions.
    pub fn weighted_terms(&self) -> impl Iterator<Item = (&str, f64)> {
        self.original_terms
            .iter()
            .map(|t| (t.as_str(), 1.0))
            .chain(self.expansion_terms.iter().map(|e| (e.term.as_str(), e.weight)))
    }

    /// `term:weight:tag` entries; original terms carry the tag `original`.
    pub fn entries(&self) -> Vec<String> {
        self.original_terms
            .iter()
            .map(|t| format!("{t}:{:.6}:original", 1.0))
            .chain(
                self.expansion_terms
                    .iter()
                    .map(|e| format!("{}:{:.6}:{}", e.term, e.weight, e.tag)),
            )
            .collect()
    }

    /// Line-oriented rendering: the entries, then `concept=` and `sense=`
    /// lines (`-` when nothing was chosen).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in self.entries() {
            out.push_str(&e);
            out.push('\n');
        }
        let _ = writeln!(out, "concept={}", self.chosen_concept.as_deref().unwrap_or("-"));
        let _ = writeln!(out, "sense={}", self.chosen_sense.as_deref().unwrap_or("-"));
        out
    }
}

/// What the user picked from the presented candidates.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Selection {
    pub concept: Option<String>,
    pub sense: Option<String>,
}

impl Selection {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.concept.is_none() && self.sense.is_none()
    }

    /// Parses a selection script: `-` for no selection, otherwise up to one
    /// concept id and one sense id separated by commas or spaces. Ids may be
    /// prefixed with `concept:` or `sense:`; bare ids are looked up in the
    /// ontology first.
    pub fn parse_script(
        script: &str,
        graph: &OntologyGraph,
        thesaurus: &Thesaurus,
    ) -> Result<Self, PipelineError> {
        let mut sel = Self::none();
        let script = script.trim();
        if script.is_empty() || script == "-" {
            return Ok(sel);
        }
        for token in script.split([',', ' ', '\t']).filter(|t| !t.is_empty()) {
            let (is_concept, id) = if let Some(id) = token.strip_prefix("concept:") {
                (true, id)
            } else if let Some(id) = token.strip_prefix("sense:") {
                (false, id)
            } else if graph.concept(token).is_some() {
                (true, token)
            } else if thesaurus.get(token).is_some() {
                (false, token)
            } else {
                return Err(PipelineError::BadSelection(format!(
                    "`{token}` is neither a concept nor a sense id"
                )));
            };
            let slot = if is_concept { &mut sel.concept } else { &mut sel.sense };
            if slot.replace(id.to_owned()).is_some() {
                return Err(PipelineError::BadSelection(format!(
                    "more than one {} in `{script}`",
                    if is_concept { "concept" } else { "sense" }
                )));
            }
        }
        Ok(sel)
    }
}
