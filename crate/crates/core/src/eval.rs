//! Ranked retrieval over the tf-idf index and precision/recall evaluation
//! of keyword search against ontology-expanded search.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::expansion::{EnrichedQuery, Pipeline, PipelineError, Scripted, Selection};
use crate::index::{DocId, TfIdfIndex};
use crate::ontology::OntologyGraph;
use crate::thesaurus::Thesaurus;

/// Standard recall levels 0.1, 0.2, ..., 1.0.
pub const RECALL_LEVELS: usize = 10;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("query has no terms")]
    EmptyQuery,
    #[error("top_n must be at least 1")]
    ZeroCutoff,
    #[error("query `{0}` has no relevant documents")]
    EmptyQrel(String),
    #[error("no relevance judgments for query `{0}`")]
    MissingQrel(String),
    #[error("query id `{0}` appears twice")]
    DuplicateQuery(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("query `{id}`: {source}")]
    Pipeline {
        id: String,
        #[source]
        source: PipelineError,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankedResult {
    pub doc_id: DocId,
    pub score: f64,
}

/// Scores every document by `Σ weight(t) · tfidf(t, d)` over the original
/// and expansion terms, drops zero scores, orders by score descending then
/// doc id, and keeps the first `top_n`.
pub fn search(index: &TfIdfIndex, query: &EnrichedQuery, top_n: usize) -> Result<Vec<RankedResult>, EvalError> {
    if top_n == 0 {
        return Err(EvalError::ZeroCutoff);
    }
    if query.original_terms.is_empty() && query.expansion_terms.is_empty() {
        return Err(EvalError::EmptyQuery);
    }
    let mut scores: HashMap<DocId, f64> = HashMap::new();
    for (term, weight) in query.weighted_terms() {
        let idf = index.idf(term);
        if idf == 0.0 {
            continue;
        }
        for p in index.postings(term) {
            *scores.entry(p.doc_id).or_insert(0.0) += weight * (p.tf as f64 * idf);
        }
    }
    let mut ranked: Vec<RankedResult> = scores
        .into_iter()
        .filter(|&(_, s)| s > 0.0)
        .map(|(doc_id, score)| RankedResult { doc_id, score })
        .collect();
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.doc_id.cmp(&b.doc_id)));
    ranked.truncate(top_n);
    Ok(ranked)
}

/// Relevance judgments for one query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Qrel {
    pub query_id: String,
    pub relevant: BTreeSet<DocId>,
}

impl Qrel {
    pub fn new(query_id: impl Into<String>, relevant: impl IntoIterator<Item = DocId>) -> Self {
        Self {
            query_id: query_id.into(),
            relevant: relevant.into_iter().collect(),
        }
    }

    fn check(&self) -> Result<(), EvalError> {
        if self.relevant.is_empty() {
            return Err(EvalError::EmptyQrel(self.query_id.clone()));
        }
        Ok(())
    }
}

/// `(|retrieved ∩ relevant| / |retrieved|, |retrieved ∩ relevant| / |relevant|)`;
/// precision is 0 when nothing was retrieved.
pub fn precision_recall(results: &[RankedResult], qrel: &Qrel) -> Result<(f64, f64), EvalError> {
    qrel.check()?;
    let hits = results.iter().filter(|r| qrel.relevant.contains(&r.doc_id)).count();
    let precision = if results.is_empty() {
        0.0
    } else {
        hits as f64 / results.len() as f64
    };
    Ok((precision, hits as f64 / qrel.relevant.len() as f64))
}

/// Interpolated precision at recall 0.1, ..., 1.0: the best precision at any
/// rank whose recall reaches the level, or 0 if the level is never reached.
pub fn interpolated_curve(results: &[RankedResult], qrel: &Qrel) -> Result<[f64; RECALL_LEVELS], EvalError> {
    qrel.check()?;
    let total = qrel.relevant.len();
    // (hits, rank) at every relevant hit
    let mut points: Vec<(usize, usize)> = Vec::new();
    let mut hits = 0;
    for (i, r) in results.iter().enumerate() {
        if qrel.relevant.contains(&r.doc_id) {
            hits += 1;
            points.push((hits, i + 1));
        }
    }
    let mut curve = [0.0; RECALL_LEVELS];
    for (level, slot) in curve.iter_mut().enumerate() {
        let tenths = level + 1;
        *slot = points
            .iter()
            .filter(|&&(h, _)| h * RECALL_LEVELS >= tenths * total)
            .map(|&(h, rank)| h as f64 / rank as f64)
            .fold(0.0, f64::max);
    }
    Ok(curve)
}

pub fn recall_level(i: usize) -> f64 {
    (i + 1) as f64 / RECALL_LEVELS as f64
}

/// A query to evaluate with its pre-recorded selection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalQuery {
    pub query_id: String,
    pub raw: String,
    pub selection: Selection,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmResult {
    pub results: Vec<RankedResult>,
    pub precision: f64,
    pub recall: f64,
    pub curve: [f64; RECALL_LEVELS],
}

impl ArmResult {
    fn evaluate(results: Vec<RankedResult>, qrel: &Qrel) -> Result<Self, EvalError> {
        let (precision, recall) = precision_recall(&results, qrel)?;
        let curve = interpolated_curve(&results, qrel)?;
        Ok(Self {
            results,
            precision,
            recall,
            curve,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryEvaluation {
    pub query_id: String,
    pub enriched: EnrichedQuery,
    pub keyword: ArmResult,
    pub expanded: ArmResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmSummary {
    pub precision: f64,
    pub recall: f64,
    pub curve: [f64; RECALL_LEVELS],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    /// Keyed by query id.
    pub queries: BTreeMap<String, QueryEvaluation>,
    pub keyword: ArmSummary,
    pub expanded: ArmSummary,
    /// Expanded minus keyword interpolated precision, per recall level.
    pub deltas: [f64; RECALL_LEVELS],
}

impl EvalReport {
    /// Recall levels where the expanded arm is strictly better.
    pub fn improved_levels(&self) -> usize {
        self.deltas.iter().filter(|&&d| d > 0.0).count()
    }

    /// One row per recall level per arm, then a summary row.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("arm\trecall\tinterpolated_precision\n");
        for (name, arm) in [("keyword", &self.keyword), ("expanded", &self.expanded)] {
            for (i, p) in arm.curve.iter().enumerate() {
                let _ = writeln!(out, "{name}\t{:.1}\t{p:.6}", recall_level(i));
            }
        }
        let _ = writeln!(
            out,
            "summary\t-\tqueries={};keyword_precision={:.6};keyword_recall={:.6};expanded_precision={:.6};expanded_recall={:.6};improved_levels={}",
            self.queries.len(),
            self.keyword.precision,
            self.keyword.recall,
            self.expanded.precision,
            self.expanded.recall,
            self.improved_levels()
        );
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<8}{:>10}{:>10}{:>10}", "recall", "keyword", "expanded", "delta");
        for i in 0..RECALL_LEVELS {
            let _ = writeln!(
                out,
                "{:<8.1}{:>10.4}{:>10.4}{:>+10.4}",
                recall_level(i),
                self.keyword.curve[i],
                self.expanded.curve[i],
                self.deltas[i]
            );
        }
        let _ = writeln!(
            out,
            "{:<8}{:>10.4}{:>10.4}{:>+10.4}",
            "P@n",
            self.keyword.precision,
            self.expanded.precision,
            self.expanded.precision - self.keyword.precision
        );
        let _ = writeln!(
            out,
            "{:<8}{:>10.4}{:>10.4}{:>+10.4}",
            "R@n",
            self.keyword.recall,
            self.expanded.recall,
            self.expanded.recall - self.keyword.recall
        );
        out
    }
}

fn summarize<'a>(arms: impl Iterator<Item = &'a ArmResult>) -> ArmSummary {
    let mut n = 0usize;
    let mut sum = ArmSummary {
        precision: 0.0,
        recall: 0.0,
        curve: [0.0; RECALL_LEVELS],
    };
    for arm in arms {
        n += 1;
        sum.precision += arm.precision;
        sum.recall += arm.recall;
        for (s, v) in sum.curve.iter_mut().zip(arm.curve) {
            *s += v;
        }
    }
    if n > 0 {
        let n = n as f64;
        sum.precision /= n;
        sum.recall /= n;
        for s in &mut sum.curve {
            *s /= n;
        }
    }
    sum
}

/// Runs every query twice, once on its raw terms and once through the
/// refinement pipeline with its recorded selection, and macro-averages both
/// arms.
pub fn compare(
    index: &TfIdfIndex,
    queries: &[EvalQuery],
    qrels: &BTreeMap<String, Qrel>,
    pipeline: &Pipeline<'_>,
    top_n: usize,
) -> Result<EvalReport, EvalError> {
    let mut ids = BTreeSet::new();
    for q in queries {
        if !ids.insert(q.query_id.as_str()) {
            return Err(EvalError::DuplicateQuery(q.query_id.clone()));
        }
        if !qrels.contains_key(&q.query_id) {
            return Err(EvalError::MissingQrel(q.query_id.clone()));
        }
    }

    let evaluated: Vec<QueryEvaluation> = queries
        .par_iter()
        .map(|q| {
            let qrel = &qrels[&q.query_id];
            let wrap = |source| EvalError::Pipeline {
                id: q.query_id.clone(),
                source,
            };
            let query = pipeline.parse_query(&q.raw).map_err(wrap)?;
            let baseline = EnrichedQuery::identity(&query.terms);
            let refinement = pipeline
                .refine(&query, &mut Scripted(q.selection.clone()))
                .map_err(wrap)?;
            Ok(QueryEvaluation {
                query_id: q.query_id.clone(),
                keyword: ArmResult::evaluate(search(index, &baseline, top_n)?, qrel)?,
                expanded: ArmResult::evaluate(search(index, &refinement.enriched, top_n)?, qrel)?,
                enriched: refinement.enriched,
            })
        })
        .collect::<Result<_, EvalError>>()?;

    let queries: BTreeMap<String, QueryEvaluation> =
        evaluated.into_iter().map(|e| (e.query_id.clone(), e)).collect();
    let keyword = summarize(queries.values().map(|q| &q.keyword));
    let expanded = summarize(queries.values().map(|q| &q.expanded));
    let mut deltas = [0.0; RECALL_LEVELS];
    for (i, d) in deltas.iter_mut().enumerate() {
        *d = expanded.curve[i] - keyword.curve[i];
    }
    Ok(EvalReport {
        queries,
        keyword,
        expanded,
        deltas,
    })
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

/// Parses `query_id<TAB>doc_id` lines. Every doc id must exist in `index`.
pub fn parse_qrels(text: &str, index: &TfIdfIndex) -> Result<BTreeMap<String, Qrel>, EvalError> {
    let mut qrels: BTreeMap<String, Qrel> = BTreeMap::new();
    for (line, row) in data_lines(text) {
        let bad = |msg: String| EvalError::Parse { line, msg };
        let [query_id, doc] = row.split('\t').collect::<Vec<_>>()[..] else {
            return Err(bad("expected query_id<TAB>doc_id".into()));
        };
        let doc_id: DocId = doc
            .trim()
            .parse()
            .map_err(|_| bad(format!("`{doc}` is not a doc id")))?;
        if !index.contains_doc(doc_id) {
            return Err(bad(format!("doc {doc_id} is not in the index")));
        }
        qrels
            .entry(query_id.to_owned())
            .or_insert_with(|| Qrel::new(query_id, []))
            .relevant
            .insert(doc_id);
    }
    Ok(qrels)
}

/// Parses `query_id<TAB>raw_query<TAB>selection_script` lines; a missing
/// script means no selection.
pub fn parse_queries(text: &str, graph: &OntologyGraph, thesaurus: &Thesaurus) -> Result<Vec<EvalQuery>, EvalError> {
    let mut out = Vec::new();
    for (line, row) in data_lines(text) {
        let fields: Vec<&str> = row.split('\t').collect();
        let (query_id, raw, script) = match fields[..] {
            [id, raw] => (id, raw, "-"),
            [id, raw, script] => (id, raw, script),
            _ => {
                return Err(EvalError::Parse {
                    line,
                    msg: "expected query_id<TAB>raw_query<TAB>selection_script".into(),
                })
            }
        };
        let selection = Selection::parse_script(script, graph, thesaurus).map_err(|e| EvalError::Parse {
            line,
            msg: e.to_string(),
        })?;
        out.push(EvalQuery {
            query_id: query_id.to_owned(),
            raw: raw.to_owned(),
            selection,
        });
    }
    Ok(out)
}

pub fn load_qrels(path: impl AsRef<Path>, index: &TfIdfIndex) -> Result<BTreeMap<String, Qrel>, EvalError> {
    parse_qrels(&fs::read_to_string(path)?, index)
}

pub fn load_queries(
    path: impl AsRef<Path>,
    graph: &OntologyGraph,
    thesaurus: &Thesaurus,
) -> Result<Vec<EvalQuery>, EvalError> {
    parse_queries(&fs::read_to_string(path)?, graph, thesaurus)
}
