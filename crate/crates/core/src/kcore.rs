//! K-core mining: clusters of exactly `k` high-weight keywords that co-occur
//! across documents, found by deterministic hill climbing.
//!
//! The objective for a term set `S` with `|S| = k` is
//!
//! ```text
//! score(S) = (1 - λ) · codoc_sum(S) / (C(k,2) · N)  +  λ · weight_sum(S) / (k · max_weight)
//! ```
//!
//! where `codoc_sum` adds the document co-occurrence counts of every pair in
//! `S` and `weight_sum` adds each term's aggregate tf-idf. Both parts lie in
//! `[0, 1]`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::index::TfIdfIndex;

#[derive(Debug, Error)]
pub enum MinerError {
    #[error("vocabulary has {vocab} terms, fewer than the {needed} required")]
    VocabularyTooSmall { vocab: usize, needed: usize },
    #[error("invalid miner configuration: {0}")]
    Config(String),
    #[error("term `{0}` is not in the candidate pool")]
    TermNotInPool(String),
    #[error("k-core file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinerConfig {
    /// Terms per core.
    pub k: usize,
    /// Candidate pool size: the top terms by aggregate tf-idf.
    pub pool_size: usize,
    /// Number of cores returned.
    pub cores: usize,
    /// Balance between co-occurrence (0) and term weight (1).
    pub lambda: f64,
}

impl Default for MinerConfig {
    fn default() -> Self {
        Self {
            k: 4,
            pool_size: 50,
            cores: 10,
            lambda: 0.5,
        }
    }
}

impl MinerConfig {
    fn validate(&self) -> Result<(), MinerError> {
        let fail = |msg: String| Err(MinerError::Config(msg));
        if self.k < 2 {
            return fail(format!("k must be at least 2, got {}", self.k));
        }
        if self.pool_size < self.k {
            return fail(format!("pool size {} is smaller than k = {}", self.pool_size, self.k));
        }
        if self.cores == 0 {
            return fail("at least one core must be requested".into());
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return fail(format!("lambda must lie in [0, 1], got {}", self.lambda));
        }
        Ok(())
    }
}

/// A ranked keyword cluster. Terms are sorted lexicographically.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KCore {
    pub terms: Vec<String>,
    pub score: f64,
}

impl KCore {
    pub fn new(mut terms: Vec<String>, score: f64) -> Self {
        terms.sort();
        terms.dedup();
        Self { terms, score }
    }

    pub fn k(&self) -> usize {
        self.terms.len()
    }

    pub fn contains(&self, term: &str) -> bool {
        self.terms.binary_search_by(|t| t.as_str().cmp(term)).is_ok()
    }
}

/// Document-level co-occurrence counts over the candidate pool.
#[derive(Debug, Clone)]
pub struct CoocMatrix {
    terms: Vec<String>,
    weights: Vec<f64>,
    codoc: Vec<u32>,
    n_docs: usize,
    // position of each pool term in lexicographic order
    lex_rank: Vec<usize>,
}

impl CoocMatrix {
    /// Pool terms, in descending aggregate weight order.
    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn position(&self, term: &str) -> Option<usize> {
        self.terms.iter().position(|t| t == term)
    }

    /// Aggregate tf-idf of the pool term at `i`.
    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn codoc(&self, i: usize, j: usize) -> u32 {
        self.codoc[i * self.terms.len() + j]
    }

    /// Number of documents containing both terms; `None` if either term is
    /// outside the pool.
    pub fn codoc_by_term(&self, a: &str, b: &str) -> Option<u32> {
        Some(self.codoc(self.position(a)?, self.position(b)?))
    }

    fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    /// Objective for pool members given in lexicographic order.
    fn score_members(&self, members: &[usize], lambda: f64) -> f64 {
        let k = members.len();
        if k == 0 {
            return 0.0;
        }
        let mut pair_sum: u64 = 0;
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                pair_sum += u64::from(self.codoc(i, j));
            }
        }
        let pairs = k * (k - 1) / 2;
        let cohesion = if pairs == 0 || self.n_docs == 0 {
            0.0
        } else {
            pair_sum as f64 / (pairs * self.n_docs) as f64
        };
        let max_weight = self.max_weight();
        let weight = if max_weight > 0.0 {
            members.iter().map(|&i| self.weights[i]).sum::<f64>() / (k as f64 * max_weight)
        } else {
            0.0
        };
        (1.0 - lambda) * cohesion + lambda * weight
    }

    fn sort_lex(&self, members: &mut [usize]) {
        members.sort_by_key(|&i| self.lex_rank[i]);
    }

    fn lex_key(&self, members: &[usize]) -> Vec<usize> {
        members.iter().map(|&i| self.lex_rank[i]).collect()
    }
}

/// Builds the co-occurrence matrix over the `pool_size` top-weighted terms.
pub fn cooccurrence(index: &TfIdfIndex, pool_size: usize) -> Result<CoocMatrix, MinerError> {
    if pool_size < 2 {
        return Err(MinerError::Config(format!(
            "pool size must be at least 2, got {pool_size}"
        )));
    }
    if index.vocab_len() < 2 {
        return Err(MinerError::VocabularyTooSmall {
            vocab: index.vocab_len(),
            needed: 2,
        });
    }
    let (terms, weights): (Vec<String>, Vec<f64>) = index.top_terms(pool_size).into_iter().unzip();
    let m = terms.len();
    let doc_lists: Vec<Vec<u32>> = terms
        .iter()
        .map(|t| index.postings(t).iter().map(|p| p.doc_id).collect())
        .collect();

    let mut codoc = vec![0u32; m * m];
    for i in 0..m {
        codoc[i * m + i] = doc_lists[i].len() as u32;
        for j in i + 1..m {
            let c = sorted_intersection_len(&doc_lists[i], &doc_lists[j]);
            codoc[i * m + j] = c;
            codoc[j * m + i] = c;
        }
    }

    let mut by_name: Vec<usize> = (0..m).collect();
    by_name.sort_by(|&a, &b| terms[a].cmp(&terms[b]));
    let mut lex_rank = vec![0; m];
    for (rank, &i) in by_name.iter().enumerate() {
        lex_rank[i] = rank;
    }

    Ok(CoocMatrix {
        terms,
        weights,
        codoc,
        n_docs: index.n_docs(),
        lex_rank,
    })
}

fn sorted_intersection_len(a: &[u32], b: &[u32]) -> u32 {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Scores an arbitrary set of pool terms.
pub fn score_kcore<S: AsRef<str>>(
    terms: &[S],
    cooc: &CoocMatrix,
    lambda: f64,
) -> Result<f64, MinerError> {
    let mut members = terms
        .iter()
        .map(|t| {
            cooc.position(t.as_ref())
                .ok_or_else(|| MinerError::TermNotInPool(t.as_ref().to_owned()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    cooc.sort_lex(&mut members);
    members.dedup();
    Ok(cooc.score_members(&members, lambda))
}

/// One climb: grow greedily from `seed` to `k` terms, then apply the best
/// single-term swap while it strictly improves the score.
fn climb(cooc: &CoocMatrix, seed: usize, k: usize, lambda: f64) -> (Vec<usize>, f64) {
    let m = cooc.len();
    let mut members = vec![seed];

    while members.len() < k {
        let mut best: Option<(f64, usize)> = None;
        for t in (0..m).filter(|t| !members.contains(t)) {
            let mut trial = members.clone();
            trial.push(t);
            cooc.sort_lex(&mut trial);
            let s = cooc.score_members(&trial, lambda);
            let better = match best {
                None => true,
                Some((bs, bt)) => s > bs || (s == bs && cooc.lex_rank[t] < cooc.lex_rank[bt]),
            };
            if better {
                best = Some((s, t));
            }
        }
        match best {
            Some((_, t)) => {
                members.push(t);
                cooc.sort_lex(&mut members);
            }
            None => break,
        }
    }

    let mut current = cooc.score_members(&members, lambda);
    loop {
        let mut best: Option<(f64, Vec<usize>)> = None;
        for out in 0..members.len() {
            for t in (0..m).filter(|t| !members.contains(t)) {
                let mut trial = members.clone();
                trial[out] = t;
                cooc.sort_lex(&mut trial);
                let s = cooc.score_members(&trial, lambda);
                let better = match &best {
                    None => true,
                    Some((bs, bset)) => {
                        s > *bs || (s == *bs && cooc.lex_key(&trial) < cooc.lex_key(bset))
                    }
                };
                if better {
                    best = Some((s, trial));
                }
            }
        }
        match best {
            Some((s, trial)) if s > current => {
                members = trial;
                current = s;
            }
            _ => break,
        }
    }
    (members, current)
}

/// Mines the top `config.cores` k-cores, restarting the climb from every
/// pool term. Climbs run in parallel; ranking is by score descending, then by
/// the sorted term list.
pub fn mine_kcores(index: &TfIdfIndex, config: &MinerConfig) -> Result<Vec<KCore>, MinerError> {
    config.validate()?;
    if index.vocab_len() < config.k {
        return Err(MinerError::VocabularyTooSmall {
            vocab: index.vocab_len(),
            needed: config.k,
        });
    }
    let cooc = cooccurrence(index, config.pool_size)?;

    let climbs: Vec<(Vec<usize>, f64)> = (0..cooc.len())
        .into_par_iter()
        .map(|seed| climb(&cooc, seed, config.k, config.lambda))
        .collect();

    let mut unique: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    for (members, score) in climbs {
        unique.insert(cooc.lex_key(&members), score);
    }
    let mut ranked: Vec<(Vec<usize>, f64)> = unique.into_iter().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(config.cores);

    let mut by_name: Vec<&String> = cooc.terms.iter().collect();
    by_name.sort();
    Ok(ranked
        .into_iter()
        .map(|(key, score)| KCore {
            terms: key.iter().map(|&r| by_name[r].clone()).collect(),
            score,
        })
        .collect())
}

/// Renders cores as `rank<TAB>score<TAB>term1,...,termk`.
pub fn kcores_to_tsv(cores: &[KCore]) -> String {
    let mut out = String::new();
    for (i, core) in cores.iter().enumerate() {
        let _ = writeln!(out, "{}\t{:.6}\t{}", i + 1, core.score, core.terms.join(","));
    }
    out
}

pub fn parse_kcores(text: &str) -> Result<Vec<KCore>, MinerError> {
    let bad = |line: usize, msg: String| MinerError::Parse { line, msg };
    let mut cores: Vec<KCore> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let [rank, score, terms] = line.split('\t').collect::<Vec<_>>()[..] else {
            return Err(bad(lineno, "expected rank, score, terms".into()));
        };
        let rank: usize = rank
            .parse()
            .map_err(|_| bad(lineno, format!("bad rank `{rank}`")))?;
        if rank != cores.len() + 1 {
            return Err(bad(lineno, format!("expected rank {}, found {rank}", cores.len() + 1)));
        }
        let score: f64 = score
            .parse()
            .map_err(|_| bad(lineno, format!("bad score `{score}`")))?;
        let terms: Vec<String> = terms.split(',').map(|t| t.trim().to_lowercase()).collect();
        if terms.iter().any(String::is_empty) {
            return Err(bad(lineno, "empty term".into()));
        }
        let core = KCore::new(terms, score);
        if core.k() < 2 {
            return Err(bad(lineno, "a core needs at least two distinct terms".into()));
        }
        if let Some(first) = cores.first() {
            if first.k() != core.k() {
                return Err(bad(
                    lineno,
                    format!("core has {} terms, earlier cores have {}", core.k(), first.k()),
                ));
            }
        }
        cores.push(core);
    }
    Ok(cores)
}

pub fn save_kcores(cores: &[KCore], path: impl AsRef<Path>) -> Result<(), MinerError> {
    fs::write(path, kcores_to_tsv(cores))?;
    Ok(())
}

pub fn load_kcores(path: impl AsRef<Path>) -> Result<Vec<KCore>, MinerError> {
    parse_kcores(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::Document;
    use crate::text::StopwordList;

    fn idx(texts: &[&str]) -> TfIdfIndex {
        let docs: Vec<_> = texts
            .iter()
            .enumerate()
            .map(|(i, t)| Document::new(i as u32, format!("d{i}"), *t))
            .collect();
        TfIdfIndex::build(&docs, &StopwordList::empty()).unwrap()
    }

    #[test]
    fn cooccurrence_counts() {
        let index = idx(&["aa bb", "aa cc"]);
        let cooc = cooccurrence(&index, 10).unwrap();
        assert_eq!(cooc.codoc_by_term("aa", "bb"), Some(1));
        assert_eq!(cooc.codoc_by_term("bb", "cc"), Some(0));
        assert_eq!(cooc.codoc_by_term("aa", "aa"), Some(2));
        assert_eq!(cooc.codoc_by_term("cc", "aa"), Some(1));
    }

    #[test]
    fn cooccurrence_needs_two_terms() {
        let index = idx(&["aa aa"]);
        assert!(matches!(
            cooccurrence(&index, 5),
            Err(MinerError::VocabularyTooSmall { vocab: 1, .. })
        ));
        assert!(cooccurrence(&idx(&["aa bb"]), 1).is_err());
    }

    #[test]
    fn score_extremes() {
        let index = idx(&["aa bb", "cc dd"]);
        let cooc = cooccurrence(&index, 10).unwrap();
        assert_eq!(score_kcore(&["aa", "cc"], &cooc, 0.0).unwrap(), 0.0);

        let index = idx(&["aa bb cc", "aa bb cc", "aa bb cc"]);
        let cooc = cooccurrence(&index, 10).unwrap();
        assert_eq!(score_kcore(&["aa", "bb", "cc"], &cooc, 0.0).unwrap(), 1.0);
        // every weight is zero (df = N)
        assert_eq!(score_kcore(&["aa", "bb", "cc"], &cooc, 1.0).unwrap(), 0.0);
        assert!(matches!(
            score_kcore(&["aa", "zz"], &cooc, 0.5),
            Err(MinerError::TermNotInPool(_))
        ));
    }

    #[test]
    fn k2_two_term_vocab() {
        let index = idx(&["aa bb", "aa"]);
        let cfg = MinerConfig {
            k: 2,
            ..MinerConfig::default()
        };
        let cores = mine_kcores(&index, &cfg).unwrap();
        assert_eq!(cores.len(), 1);
        assert_eq!(cores[0].terms, ["aa", "bb"]);
    }

    #[test]
    fn vocab_smaller_than_k() {
        let index = idx(&["aa bb cc"]);
        assert!(matches!(
            mine_kcores(&index, &MinerConfig::default()),
            Err(MinerError::VocabularyTooSmall { vocab: 3, needed: 4 })
        ));
    }

    #[test]
    fn config_validation() {
        let index = idx(&["aa bb cc dd"]);
        for cfg in [
            MinerConfig { k: 1, ..Default::default() },
            MinerConfig { pool_size: 3, ..Default::default() },
            MinerConfig { cores: 0, ..Default::default() },
            MinerConfig { lambda: 1.5, ..Default::default() },
        ] {
            assert!(matches!(mine_kcores(&index, &cfg), Err(MinerError::Config(_))), "{cfg:?}");
        }
    }

    #[test]
    fn tsv_round_trip() {
        let cores = vec![
            KCore::new(vec!["oncology".into(), "cancer".into(), "oncogene".into(), "metastasis".into()], 0.8125),
            KCore::new(vec!["lump".into(), "breast".into(), "cancer".into(), "leukemia".into()], 0.5),
        ];
        let text = kcores_to_tsv(&cores);
        assert_eq!(
            text,
            "1\t0.812500\tcancer,metastasis,oncogene,oncology\n2\t0.500000\tbreast,cancer,leukemia,lump\n"
        );
        assert_eq!(parse_kcores(&text).unwrap(), cores);
    }

    #[test]
    fn parse_rejects_bad_rows() {
        assert!(matches!(parse_kcores("2\t0.1\taa,bb\n"), Err(MinerError::Parse { line: 1, .. })));
        assert!(parse_kcores("1\t0.1\taa\n").is_err());
        assert!(parse_kcores("1\t0.1\taa,bb\n2\t0.1\taa,bb,cc\n").is_err());
        assert!(parse_kcores("1\tx\taa,bb\n").is_err());
        assert!(parse_kcores("# comment\n\n").unwrap().is_empty());
    }
}
