//! Domain ontology: a single-rooted concept taxonomy, a relation-type
//! taxonomy, typed edges, and hierarchy-distance similarity.
//!
//! Every node gets a milestone `0.5 / K^depth`. The distance between two
//! nodes is the sum of the milestone drops from their closest common parent
//! down to each of them, and similarity is `1 - distance`. Concepts declared
//! as synonyms or acronyms of each other are at distance 0.
//!
//! File format (`#` starts a comment):
//!
//! ```text
//! FACTOR <K>
//! CONCEPT <id> ROOT|PARENT <parent_id> [LABEL <text>]
//! SYNONYM <id> <alias...>
//! ACRONYM <id> <alias...>
//! RELATION <id> ROOT|PARENT <parent_id>
//! EDGE <subject_id> <relation_id> <object_id>
//! ```

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

pub const DEFAULT_FACTOR: f64 = 2.0;

#[derive(Debug, Error)]
pub enum OntologyError {
    #[error("ontology line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown concept `{0}`")]
    UnknownConcept(String),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("milestone factor must be greater than 1, got {0}")]
    Factor(f64),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn parse_err(line: usize, msg: impl Into<String>) -> OntologyError {
    OntologyError::Parse {
        line,
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Concept {
    pub concept_id: String,
    pub label: String,
    /// `None` for the root.
    pub parent: Option<String>,
    pub depth: usize,
    pub synonyms: Vec<String>,
    pub acronyms: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelationType {
    pub relation_id: String,
    pub parent: Option<String>,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Edge {
    pub subject: String,
    pub relation: String,
    pub object: String,
}

/// Parent pointers and depths of a single-rooted tree.
#[derive(Debug, Clone, Default, PartialEq)]
struct Taxonomy {
    parent: Vec<Option<usize>>,
    depth: Vec<usize>,
}

impl Taxonomy {
    fn milestone(&self, node: usize, factor: f64) -> f64 {
        0.5 / factor.powi(self.depth[node] as i32)
    }

    fn ccp(&self, mut a: usize, mut b: usize) -> usize {
        while self.depth[a] > self.depth[b] {
            a = self.parent[a].expect("non-root has a parent");
        }
        while self.depth[b] > self.depth[a] {
            b = self.parent[b].expect("non-root has a parent");
        }
        while a != b {
            a = self.parent[a].expect("distinct nodes at depth 0 cannot both be roots");
            b = self.parent[b].expect("distinct nodes at depth 0 cannot both be roots");
        }
        a
    }

    fn distance(&self, a: usize, b: usize, factor: f64) -> f64 {
        if a == b {
            return 0.0;
        }
        let top = self.milestone(self.ccp(a, b), factor);
        (top - self.milestone(a, factor)) + (top - self.milestone(b, factor))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OntologyGraph {
    concepts: Vec<Concept>,
    concept_pos: HashMap<String, usize>,
    concept_tree: Taxonomy,
    relations: Vec<RelationType>,
    relation_pos: HashMap<String, usize>,
    relation_tree: Taxonomy,
    edges: Vec<Edge>,
    factor: f64,
    // lowercase alias -> concept position; first declaration wins
    aliases: HashMap<String, usize>,
}

struct Declared {
    id: String,
    parent: Option<String>,
    line: usize,
}

impl OntologyGraph {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, OntologyError> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self, OntologyError> {
        let mut factor: Option<f64> = None;
        let mut concept_decls: Vec<Declared> = Vec::new();
        let mut labels: Vec<String> = Vec::new();
        let mut relation_decls: Vec<Declared> = Vec::new();
        let mut alias_decls: Vec<(String, Vec<String>, bool, usize)> = Vec::new();
        let mut edge_decls: Vec<(Edge, usize)> = Vec::new();

        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields[0] {
                "FACTOR" => {
                    let [_, k] = fields[..] else {
                        return Err(parse_err(lineno, "FACTOR takes one number"));
                    };
                    if factor.is_some() {
                        return Err(parse_err(lineno, "FACTOR declared twice"));
                    }
                    let k: f64 = k
                        .parse()
                        .map_err(|_| parse_err(lineno, format!("`{k}` is not a number")))?;
                    if !(k.is_finite() && k > 1.0) {
                        return Err(parse_err(lineno, format!("factor must be greater than 1, got {k}")));
                    }
                    factor = Some(k);
                }
                "CONCEPT" => {
                    let (decl, rest) = parse_node(&fields, lineno)?;
                    let label = match rest {
                        [] => decl.id.clone(),
                        ["LABEL", words @ ..] if !words.is_empty() => words.join(" "),
                        _ => return Err(parse_err(lineno, "expected `LABEL <text>`")),
                    };
                    concept_decls.push(decl);
                    labels.push(label);
                }
                "RELATION" => {
                    let (decl, rest) = parse_node(&fields, lineno)?;
                    if !rest.is_empty() {
                        return Err(parse_err(lineno, "unexpected text after relation parent"));
                    }
                    relation_decls.push(decl);
                }
                kw @ ("SYNONYM" | "ACRONYM") => {
                    if fields.len() < 3 {
                        return Err(parse_err(lineno, format!("{kw} needs a concept id and at least one alias")));
                    }
                    let names = fields[2..].iter().map(|s| s.to_string()).collect();
                    alias_decls.push((fields[1].to_owned(), names, kw == "ACRONYM", lineno));
                }
                "EDGE" => {
                    let [_, s, r, o] = fields[..] else {
                        return Err(parse_err(lineno, "EDGE takes subject, relation and object"));
                    };
                    edge_decls.push((
                        Edge {
                            subject: s.to_owned(),
                            relation: r.to_owned(),
                            object: o.to_owned(),
                        },
                        lineno,
                    ));
                }
                other => return Err(parse_err(lineno, format!("unknown record `{other}`"))),
            }
        }

        let (concept_pos, concept_tree) = build_tree(&concept_decls, "concept")?;
        if concept_decls.is_empty() {
            return Err(parse_err(text.lines().count().max(1), "ontology declares no concepts"));
        }
        let (relation_pos, relation_tree) = build_tree(&relation_decls, "relation")?;

        let mut concepts: Vec<Concept> = concept_decls
            .iter()
            .zip(labels)
            .enumerate()
            .map(|(i, (d, label))| Concept {
                concept_id: d.id.clone(),
                label,
                parent: d.parent.clone(),
                depth: concept_tree.depth[i],
                synonyms: Vec::new(),
                acronyms: Vec::new(),
            })
            .collect();

        let mut aliases: HashMap<String, usize> = HashMap::new();
        for (id, names, acronym, line) in alias_decls {
            let pos = *concept_pos
                .get(&id)
                .ok_or_else(|| parse_err(line, format!("unknown concept `{id}`")))?;
            for name in names {
                aliases.entry(name.to_lowercase()).or_insert(pos);
                let list = if acronym {
                    &mut concepts[pos].acronyms
                } else {
                    &mut concepts[pos].synonyms
                };
                if !list.contains(&name) {
                    list.push(name);
                }
            }
        }

        let mut edges = Vec::with_capacity(edge_decls.len());
        for (edge, line) in edge_decls {
            for id in [&edge.subject, &edge.object] {
                if !concept_pos.contains_key(id) {
                    return Err(parse_err(line, format!("unknown concept `{id}`")));
                }
            }
            if !relation_pos.contains_key(&edge.relation) {
                return Err(parse_err(line, format!("unknown relation `{}`", edge.relation)));
            }
            edges.push(edge);
        }

        let relations = relation_decls
            .iter()
            .enumerate()
            .map(|(i, d)| RelationType {
                relation_id: d.id.clone(),
                parent: d.parent.clone(),
                depth: relation_tree.depth[i],
            })
            .collect();

        Ok(Self {
            concepts,
            concept_pos,
            concept_tree,
            relations,
            relation_pos,
            relation_tree,
            edges,
            factor: factor.unwrap_or(DEFAULT_FACTOR),
            aliases,
        })
    }

    /// The milestone factor K.
    pub fn factor(&self) -> f64 {
        self.factor
    }

    /// Returns a copy using a different milestone factor.
    pub fn with_factor(&self, factor: f64) -> Result<Self, OntologyError> {
        if !(factor.is_finite() && factor > 1.0) {
            return Err(OntologyError::Factor(factor));
        }
        Ok(Self {
            factor,
            ..self.clone()
        })
    }

    /// Concepts in declaration order.
    pub fn concepts(&self) -> &[Concept] {
        &self.concepts
    }

    pub fn relations(&self) -> &[RelationType] {
        &self.relations
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn concept(&self, id: &str) -> Option<&Concept> {
        self.concept_pos.get(id).map(|&i| &self.concepts[i])
    }

    pub fn root(&self) -> &Concept {
        self.concepts
            .iter()
            .find(|c| c.parent.is_none())
            .expect("a loaded ontology has a root")
    }

    /// Finds a concept by id, then by declared synonym or acronym, then by
    /// label. Alias and label matching ignore case.
    pub fn resolve(&self, name: &str) -> Option<&Concept> {
        if let Some(c) = self.concept(name) {
            return Some(c);
        }
        let lower = name.to_lowercase();
        if let Some(&i) = self.aliases.get(&lower) {
            return Some(&self.concepts[i]);
        }
        self.concepts.iter().find(|c| c.label.to_lowercase() == lower)
    }

    /// Direct children in declaration order.
    pub fn children(&self, id: &str) -> Vec<&Concept> {
        self.concepts
            .iter()
            .filter(|c| c.parent.as_deref() == Some(id))
            .collect()
    }

    /// Edges with `id` as subject or object.
    pub fn incident_edges(&self, id: &str) -> Vec<&Edge> {
        self.edges
            .iter()
            .filter(|e| e.subject == id || e.object == id)
            .collect()
    }

    fn concept_index(&self, id: &str) -> Result<usize, OntologyError> {
        self.concept_pos
            .get(id)
            .copied()
            .ok_or_else(|| OntologyError::UnknownConcept(id.to_owned()))
    }

    fn relation_index(&self, id: &str) -> Result<usize, OntologyError> {
        self.relation_pos
            .get(id)
            .copied()
            .ok_or_else(|| OntologyError::UnknownRelation(id.to_owned()))
    }

    pub fn milestone(&self, id: &str) -> Result<f64, OntologyError> {
        Ok(self.concept_tree.milestone(self.concept_index(id)?, self.factor))
    }

    /// Closest common parent: the deepest ancestor-or-self shared by both.
    pub fn ccp(&self, a: &str, b: &str) -> Result<&str, OntologyError> {
        let c = self.concept_tree.ccp(self.concept_index(a)?, self.concept_index(b)?);
        Ok(&self.concepts[c].concept_id)
    }

    /// True when either concept lists the other's id or label as a synonym or
    /// acronym.
    pub fn are_synonymous(&self, a: &str, b: &str) -> Result<bool, OntologyError> {
        let (ca, cb) = (
            &self.concepts[self.concept_index(a)?],
            &self.concepts[self.concept_index(b)?],
        );
        let declares = |from: &Concept, to: &Concept| {
            from.synonyms.iter().chain(&from.acronyms).any(|alias| {
                alias == &to.concept_id || alias.eq_ignore_ascii_case(&to.label)
            })
        };
        Ok(declares(ca, cb) || declares(cb, ca))
    }

    pub fn concept_distance(&self, a: &str, b: &str) -> Result<f64, OntologyError> {
        let (ia, ib) = (self.concept_index(a)?, self.concept_index(b)?);
        if ia == ib || self.are_synonymous(a, b)? {
            return Ok(0.0);
        }
        Ok(self.concept_tree.distance(ia, ib, self.factor))
    }

    pub fn concept_similarity(&self, a: &str, b: &str) -> Result<f64, OntologyError> {
        Ok(1.0 - self.concept_distance(a, b)?)
    }

    pub fn relation_milestone(&self, id: &str) -> Result<f64, OntologyError> {
        Ok(self.relation_tree.milestone(self.relation_index(id)?, self.factor))
    }

    pub fn relation_distance(&self, a: &str, b: &str) -> Result<f64, OntologyError> {
        let (ia, ib) = (self.relation_index(a)?, self.relation_index(b)?);
        Ok(self.relation_tree.distance(ia, ib, self.factor))
    }

    pub fn relation_similarity(&self, a: &str, b: &str) -> Result<f64, OntologyError> {
        Ok(1.0 - self.relation_distance(a, b)?)
    }
}

fn parse_node<'a>(fields: &'a [&'a str], line: usize) -> Result<(Declared, &'a [&'a str]), OntologyError> {
    match fields {
        [_, id, "ROOT", rest @ ..] => Ok((
            Declared {
                id: id.to_string(),
                parent: None,
                line,
            },
            rest,
        )),
        [_, id, "PARENT", parent, rest @ ..] => Ok((
            Declared {
                id: id.to_string(),
                parent: Some(parent.to_string()),
                line,
            },
            rest,
        )),
        _ => Err(parse_err(line, format!("expected `{} <id> ROOT|PARENT <parent_id>`", fields[0]))),
    }
}

fn build_tree(decls: &[Declared], kind: &str) -> Result<(HashMap<String, usize>, Taxonomy), OntologyError> {
    let mut pos: HashMap<String, usize> = HashMap::new();
    for (i, d) in decls.iter().enumerate() {
        if pos.insert(d.id.clone(), i).is_some() {
            return Err(parse_err(d.line, format!("duplicate {kind} `{}`", d.id)));
        }
    }
    let mut roots = decls.iter().filter(|d| d.parent.is_none());
    if let (Some(_), Some(second)) = (roots.next(), roots.next()) {
        return Err(parse_err(second.line, format!("second {kind} root `{}`", second.id)));
    }
    if !decls.is_empty() && decls.iter().all(|d| d.parent.is_some()) {
        return Err(parse_err(decls[0].line, format!("no {kind} is declared ROOT")));
    }

    let mut parent = Vec::with_capacity(decls.len());
    for d in decls {
        parent.push(match &d.parent {
            None => None,
            Some(p) => Some(
                *pos.get(p)
                    .ok_or_else(|| parse_err(d.line, format!("unknown parent {kind} `{p}`")))?,
            ),
        });
    }

    let mut depth: Vec<Option<usize>> = vec![None; decls.len()];
    for start in 0..decls.len() {
        let mut chain = Vec::new();
        let mut node = start;
        let base = loop {
            if let Some(d) = depth[node] {
                break d;
            }
            if chain.len() > decls.len() {
                return Err(parse_err(decls[start].line, format!("cycle through {kind} `{}`", decls[start].id)));
            }
            chain.push(node);
            match parent[node] {
                None => {
                    depth[node] = Some(0);
                    chain.pop();
                    break 0;
                }
                Some(p) => node = p,
            }
        };
        for (offset, &n) in chain.iter().rev().enumerate() {
            depth[n] = Some(base + offset + 1);
        }
    }

    Ok((
        pos,
        Taxonomy {
            parent,
            depth: depth.into_iter().map(|d| d.expect("depth assigned")).collect(),
        },
    ))
}
