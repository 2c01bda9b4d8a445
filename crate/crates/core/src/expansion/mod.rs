//! Query refinement: match the query against mined k-cores, disambiguate
//! its senses, propose ontology concepts, let a [`Selector`] choose, and
//! build the enriched query from that choice.

mod enriched;

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::Serialize;
use thiserror::Error;

use crate::kcore::KCore;
use crate::ontology::OntologyGraph;
use crate::text::{tokenize, StopwordList};
use crate::thesaurus::{LexicalRelation, Thesaurus};

pub use enriched::{EnrichedQuery, ExpansionTag, ExpansionTerm, Selection};

/// Number of best-matching k-cores that feed the disambiguation context.
pub const WSD_CONTEXT_CORES: usize = 3;
/// Maximum number of concept candidates returned.
pub const MAX_CONCEPT_CANDIDATES: usize = 10;
const SYNONYM_MATCH_WEIGHT: f64 = 0.5;
const MAX_RELATION_PAIRS: usize = 50;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("empty query after tokenization")]
    EmptyQuery,
    #[error("unknown concept `{0}`")]
    UnknownConcept(String),
    #[error("unknown sense `{0}`")]
    UnknownSense(String),
    #[error("bad selection: {0}")]
    BadSelection(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Query {
    pub raw: String,
    pub terms: Vec<String>,
}

impl Query {
    pub fn parse(raw: &str, stopwords: &StopwordList) -> Result<Self, PipelineError> {
        let terms = tokenize(raw, stopwords);
        if terms.is_empty() {
            return Err(PipelineError::EmptyQuery);
        }
        Ok(Self {
            raw: raw.to_owned(),
            terms,
        })
    }

    /// Query terms plus any multi-word thesaurus lemma spelled out by
    /// consecutive terms.
    fn units(&self, thesaurus: &Thesaurus) -> Vec<String> {
        let mut units: Vec<String> = Vec::new();
        for t in &self.terms {
            if !units.contains(t) {
                units.push(t.clone());
            }
        }
        for len in 2..=thesaurus.max_phrase_words().min(self.terms.len()) {
            for window in self.terms.windows(len) {
                let phrase = window.join(" ");
                if !units.contains(&phrase) && !thesaurus.senses(&phrase).is_empty() {
                    units.push(phrase);
                }
            }
        }
        units
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KCoreMatch {
    /// 1-based position of the core in the mined ranking.
    pub rank: usize,
    pub kcore: KCore,
    pub relevance: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SenseCandidate {
    pub sense_id: String,
    pub lemma: String,
    pub score: usize,
    pub gloss: String,
}

/// Ranked senses for one query term or phrase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TermSenses {
    pub lemma: String,
    pub candidates: Vec<SenseCandidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConceptCandidate {
    pub concept_id: String,
    pub label: String,
    pub similarity_score: f64,
    pub supporting_kcore: KCore,
    /// Terms of the supporting core that map to this concept.
    pub matched_terms: Vec<String>,
}

/// Everything presented to the user before a selection is made.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidates {
    pub senses: Vec<TermSenses>,
    pub concepts: Vec<ConceptCandidate>,
    pub kcores: Vec<KCoreMatch>,
}

/// Scores each core by `|query ∩ core| + 0.5 · |synonyms(query) ∩ core|`,
/// where synonyms are the co-members of every synset of a query term. Cores
/// scoring 0 are dropped; ties keep the mined order.
pub fn match_kcores(query: &Query, kcores: &[KCore], thesaurus: &Thesaurus) -> Vec<KCoreMatch> {
    let direct: HashSet<&str> = query.terms.iter().map(String::as_str).collect();
    let mut synonyms: HashSet<&str> = HashSet::new();
    for unit in query.units(thesaurus) {
        for synset in thesaurus.senses(&unit) {
            synonyms.extend(synset.words.iter().map(String::as_str));
        }
    }
    synonyms.retain(|w| !direct.contains(w));

    let mut matches: Vec<KCoreMatch> = kcores
        .iter()
        .enumerate()
        .filter_map(|(i, core)| {
            let hits = core.terms.iter().filter(|t| direct.contains(t.as_str())).count();
            let syn_hits = core.terms.iter().filter(|t| synonyms.contains(t.as_str())).count();
            let relevance = hits as f64 + SYNONYM_MATCH_WEIGHT * syn_hits as f64;
            (relevance > 0.0).then(|| KCoreMatch {
                rank: i + 1,
                kcore: core.clone(),
                relevance,
            })
        })
        .collect();
    matches.sort_by(|a, b| b.relevance.total_cmp(&a.relevance).then(a.rank.cmp(&b.rank)));
    matches
}

/// Gloss-overlap sense ranking.
///
/// For every query term (or multi-word lemma) with at least one sense, the
/// context is the other query terms plus the terms of the best
/// [`WSD_CONTEXT_CORES`] cores. Each sense is scored by how many context
/// words occur in its lemmas, its gloss, or the lemmas of its direct
/// hypernyms and hyponyms. Ties keep file order.
pub fn disambiguate(
    query: &Query,
    relevant: &[KCoreMatch],
    thesaurus: &Thesaurus,
    stopwords: &StopwordList,
) -> Vec<TermSenses> {
    let empty = StopwordList::empty();
    let core_terms: BTreeSet<&str> = relevant
        .iter()
        .take(WSD_CONTEXT_CORES)
        .flat_map(|m| m.kcore.terms.iter().map(String::as_str))
        .collect();

    let mut out = Vec::new();
    for unit in query.units(thesaurus) {
        let synsets = thesaurus.senses(&unit);
        if synsets.is_empty() {
            continue;
        }
        let own: HashSet<&str> = unit.split(' ').collect();
        let context: HashSet<&str> = query
            .terms
            .iter()
            .map(String::as_str)
            .filter(|t| !own.contains(t))
            .chain(core_terms.iter().copied())
            .collect();

        let mut candidates: Vec<SenseCandidate> = synsets
            .iter()
            .map(|synset| {
                let mut bag: HashSet<String> = HashSet::new();
                for w in &synset.words {
                    bag.extend(tokenize(w, &empty));
                }
                bag.extend(tokenize(&synset.gloss, stopwords));
                for id in synset.hypernyms.iter().chain(&synset.hyponyms) {
                    if let Some(related) = thesaurus.get(id) {
                        for w in &related.words {
                            bag.extend(tokenize(w, &empty));
                        }
                    }
                }
                let score = context.iter().filter(|c| bag.contains(**c)).count();
                SenseCandidate {
                    sense_id: synset.sense_id.clone(),
                    lemma: unit.clone(),
                    score,
                    gloss: synset.gloss.clone(),
                }
            })
            .collect();
        candidates.sort_by_key(|c| std::cmp::Reverse(c.score));
        out.push(TermSenses {
            lemma: unit,
            candidates,
        });
    }
    out
}

/// Lookup from unigrams to the concepts whose label, synonyms or acronyms
/// contain them.
struct ConceptMatcher<'g> {
    graph: &'g OntologyGraph,
    // term -> [(concept position, exact name match, tokens in the matched name)]
    postings: HashMap<String, Vec<(usize, bool, usize)>>,
}

impl<'g> ConceptMatcher<'g> {
    fn new(graph: &'g OntologyGraph) -> Self {
        let empty = StopwordList::empty();
        let mut postings: HashMap<String, Vec<(usize, bool, usize)>> = HashMap::new();
        for (pos, concept) in graph.concepts().iter().enumerate() {
            let names = std::iter::once(&concept.label)
                .chain(&concept.synonyms)
                .chain(&concept.acronyms);
            for name in names {
                let toks = tokenize(name, &empty);
                let n = toks.len();
                for tok in toks {
                    let entry = postings.entry(tok).or_default();
                    let hit = (pos, n == 1, n);
                    match entry.iter_mut().find(|(p, _, _)| *p == pos) {
                        Some(prev) if (!hit.1, hit.2) < (!prev.1, prev.2) => *prev = hit,
                        Some(_) => {}
                        None => entry.push(hit),
                    }
                }
            }
        }
        Self { graph, postings }
    }

    /// Every concept position `term` maps to.
    fn concepts_for(&self, term: &str) -> impl Iterator<Item = usize> + '_ {
        self.postings.get(term).into_iter().flatten().map(|&(p, _, _)| p)
    }

    /// The single concept a term stands for: an exact one-word name first,
    /// then the shortest name containing it, then the smallest concept id.
    fn primary(&self, term: &str) -> Option<usize> {
        let concepts = self.graph.concepts();
        self.postings.get(term)?.iter().copied().min_by(|a, b| {
            (!a.1, a.2)
                .cmp(&(!b.1, b.2))
                .then_with(|| concepts[a.0].concept_id.cmp(&concepts[b.0].concept_id))
        })
        .map(|(p, _, _)| p)
    }
}

/// Proposes ontology concepts for the relevant cores.
///
/// Each core term maps to the concepts whose label, synonyms or acronyms
/// contain it, and stands for one primary concept. A concept touched by a
/// core scores the mean similarity between itself and the primary concepts
/// of the core's mapped terms. The best score per concept is kept; results
/// are sorted by score, then concept id, and capped at
/// [`MAX_CONCEPT_CANDIDATES`].
pub fn extract_concepts(relevant: &[KCoreMatch], graph: &OntologyGraph) -> Vec<ConceptCandidate> {
    let matcher = ConceptMatcher::new(graph);
    let concepts = graph.concepts();
    let mut best: HashMap<usize, ConceptCandidate> = HashMap::new();

    for m in relevant {
        let mapped: Vec<(&String, usize)> = m
            .kcore
            .terms
            .iter()
            .filter_map(|t| matcher.primary(t).map(|p| (t, p)))
            .collect();
        if mapped.is_empty() {
            continue;
        }
        let mut touched: Vec<usize> = mapped
            .iter()
            .flat_map(|(t, _)| matcher.concepts_for(t))
            .collect();
        touched.sort_unstable();
        touched.dedup();

        for c in touched {
            let id = &concepts[c].concept_id;
            let total: f64 = mapped
                .iter()
                .map(|&(_, p)| {
                    graph
                        .concept_similarity(id, &concepts[p].concept_id)
                        .expect("concepts come from the graph")
                })
                .sum();
            let score = total / mapped.len() as f64;
            let matched_terms = mapped
                .iter()
                .filter(|(t, _)| matcher.concepts_for(t).any(|x| x == c))
                .map(|(t, _)| (*t).clone())
                .collect();
            let candidate = ConceptCandidate {
                concept_id: id.clone(),
                label: concepts[c].label.clone(),
                similarity_score: score,
                supporting_kcore: m.kcore.clone(),
                matched_terms,
            };
            match best.get(&c) {
                Some(prev) if prev.similarity_score >= score => {}
                _ => {
                    best.insert(c, candidate);
                }
            }
        }
    }

    let mut out: Vec<ConceptCandidate> = best.into_values().collect();
    out.sort_by(|a, b| {
        b.similarity_score
            .total_cmp(&a.similarity_score)
            .then_with(|| a.concept_id.cmp(&b.concept_id))
    });
    out.truncate(MAX_CONCEPT_CANDIDATES);
    out
}

/// Builds the enriched query for a selection.
///
/// A chosen sense contributes its thesaurus neighborhood (synonyms at 1.0,
/// one-hop relatives at 0.5). A chosen concept contributes its label words
/// and aliases at 1.0 and the label words of its direct children weighted by
/// their similarity to it. Multi-word lemmas are split into index terms.
pub fn reformulate(
    query: &Query,
    selection: &Selection,
    thesaurus: &Thesaurus,
    graph: &OntologyGraph,
    stopwords: &StopwordList,
) -> Result<EnrichedQuery, PipelineError> {
    let mut enriched = EnrichedQuery::identity(&query.terms);

    if let Some(sense_id) = &selection.sense {
        let synset = thesaurus
            .get(sense_id)
            .ok_or_else(|| PipelineError::UnknownSense(sense_id.clone()))?;
        let units = query.units(thesaurus);
        let source = synset
            .words
            .iter()
            .find(|w| units.contains(w))
            .map_or("", String::as_str);
        let neighbors = thesaurus
            .neighborhood(sense_id, source)
            .map_err(|_| PipelineError::UnknownSense(sense_id.clone()))?;
        for n in neighbors {
            for term in tokenize(&n.lemma, stopwords) {
                enriched.add(&term, n.weight, n.relation.into());
            }
        }
        enriched.chosen_sense = Some(sense_id.clone());
    }

    if let Some(concept_id) = &selection.concept {
        let concept = graph
            .concept(concept_id)
            .ok_or_else(|| PipelineError::UnknownConcept(concept_id.clone()))?;
        for term in tokenize(&concept.label, stopwords) {
            enriched.add(&term, 1.0, ExpansionTag::ConceptLabel);
        }
        for alias in concept.synonyms.iter().chain(&concept.acronyms) {
            for term in tokenize(alias, stopwords) {
                enriched.add(&term, 1.0, ExpansionTag::ConceptSynonym);
            }
        }
        for child in graph.children(concept_id) {
            let weight = graph
                .concept_similarity(concept_id, &child.concept_id)
                .expect("children come from the graph");
            for term in tokenize(&child.label, stopwords) {
                enriched.add(&term, weight, LexicalRelation::Hyponym.into());
            }
        }
        enriched.chosen_concept = Some(concept_id.clone());
    }

    Ok(enriched)
}

/// Receives the candidates and returns the user's choice.
pub trait Selector {
    fn select(&mut self, candidates: &Candidates) -> Result<Selection, String>;
}

impl<F> Selector for F
where
    F: FnMut(&Candidates) -> Result<Selection, String>,
{
    fn select(&mut self, candidates: &Candidates) -> Result<Selection, String> {
        self(candidates)
    }
}

/// A fixed, pre-recorded selection.
#[derive(Debug, Clone, Default)]
pub struct Scripted(pub Selection);

impl Selector for Scripted {
    fn select(&mut self, _: &Candidates) -> Result<Selection, String> {
        Ok(self.0.clone())
    }
}

/// Picks the best concept candidate, if any.
#[derive(Debug, Clone, Copy, Default)]
pub struct TopConcept;

impl Selector for TopConcept {
    fn select(&mut self, candidates: &Candidates) -> Result<Selection, String> {
        Ok(Selection {
            concept: candidates.concepts.first().map(|c| c.concept_id.clone()),
            sense: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Refinement {
    pub candidates: Candidates,
    pub selection: Selection,
    pub enriched: EnrichedQuery,
    /// Warnings, e.g. a selector failure that fell back to no expansion.
    pub notes: Vec<String>,
}

/// Pairwise relation similarity between edges incident to a concept.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelationDiagnostic {
    pub concept_id: String,
    pub first: String,
    pub second: String,
    pub similarity: f64,
}

/// The loaded stores a refinement runs against.
#[derive(Debug, Clone, Copy)]
pub struct Pipeline<'a> {
    pub kcores: &'a [KCore],
    pub graph: &'a OntologyGraph,
    pub thesaurus: &'a Thesaurus,
    pub stopwords: &'a StopwordList,
}

impl<'a> Pipeline<'a> {
    pub fn new(
        kcores: &'a [KCore],
        graph: &'a OntologyGraph,
        thesaurus: &'a Thesaurus,
        stopwords: &'a StopwordList,
    ) -> Self {
        Self {
            kcores,
            graph,
            thesaurus,
            stopwords,
        }
    }

    pub fn parse_query(&self, raw: &str) -> Result<Query, PipelineError> {
        Query::parse(raw, self.stopwords)
    }

    /// Matches, disambiguates and extracts concepts.
    pub fn candidates(&self, query: &Query) -> Candidates {
        let kcores = match_kcores(query, self.kcores, self.thesaurus);
        let senses = disambiguate(query, &kcores, self.thesaurus, self.stopwords);
        let concepts = extract_concepts(&kcores, self.graph);
        Candidates {
            senses,
            concepts,
            kcores,
        }
    }

    pub fn reformulate(&self, query: &Query, selection: &Selection) -> Result<EnrichedQuery, PipelineError> {
        reformulate(query, selection, self.thesaurus, self.graph, self.stopwords)
    }

    /// Runs the whole loop: candidates, selection, reformulation. A selector
    /// error yields the unexpanded query and a note; unknown ids in a
    /// returned selection are an error.
    pub fn refine(&self, query: &Query, selector: &mut dyn Selector) -> Result<Refinement, PipelineError> {
        let candidates = self.candidates(query);
        let mut notes = Vec::new();
        let selection = match selector.select(&candidates) {
            Ok(sel) => sel,
            Err(err) => {
                let note = format!("selection failed, using the unexpanded query: {err}");
                log::warn!("{note}");
                notes.push(note);
                Selection::none()
            }
        };
        let enriched = self.reformulate(query, &selection)?;
        Ok(Refinement {
            candidates,
            selection,
            enriched,
            notes,
        })
    }

    /// Relation similarity for every pair of edges incident to each
    /// candidate concept. Reported for inspection only.
    pub fn relation_diagnostics(&self, concepts: &[ConceptCandidate]) -> Vec<RelationDiagnostic> {
        let mut out = Vec::new();
        for c in concepts {
            let edges = self.graph.incident_edges(&c.concept_id);
            for (i, a) in edges.iter().enumerate() {
                for b in &edges[i + 1..] {
                    if out.len() >= MAX_RELATION_PAIRS {
                        return out;
                    }
                    let similarity = self
                        .graph
                        .relation_similarity(&a.relation, &b.relation)
                        .expect("edges reference declared relations");
                    out.push(RelationDiagnostic {
                        concept_id: c.concept_id.clone(),
                        first: format!("{} {} {}", a.subject, a.relation, a.object),
                        second: format!("{} {} {}", b.subject, b.relation, b.object),
                        similarity,
                    });
                }
            }
        }
        out
    }
}
