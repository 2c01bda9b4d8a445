//! Read-only HTTP/JSON service over a loaded set of stores.
//!
//! Routes (all GET):
//!
//! * `/api/candidates?q=` senses, concepts and k-cores for a raw query
//! * `/api/search?q=&concept=&sense=&mode=&n=` ranked results for one arm
//! * `/api/meta` store statistics
//!
//! Field names are documented in `API.md` at the repository root.

use std::io;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Query as QueryParams, State};
use axum::http::{Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tower_http::cors::{Any, CorsLayer};

use ontosearch::eval::{search, EvalError};
use ontosearch::expansion::{
    ConceptCandidate, EnrichedQuery, KCoreMatch, Pipeline, PipelineError, Query, Selection, TermSenses,
};
use ontosearch::index::{IndexError, TfIdfIndex};
use ontosearch::kcore::{load_kcores, KCore, MinerError};
use ontosearch::ontology::{OntologyError, OntologyGraph};
use ontosearch::text::StopwordList;
use ontosearch::thesaurus::{Thesaurus, ThesaurusError};

pub const DEFAULT_PORT: u16 = 7878;
pub const DEFAULT_TOP_N: usize = 10;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("index {path}: {source}")]
    Index { path: PathBuf, source: IndexError },
    #[error("k-cores {path}: {source}")]
    KCores { path: PathBuf, source: MinerError },
    #[error("ontology {path}: {source}")]
    Ontology { path: PathBuf, source: OntologyError },
    #[error("thesaurus {path}: {source}")]
    Thesaurus { path: PathBuf, source: ThesaurusError },
    #[error("stopwords {path}: {source}")]
    Stopwords { path: PathBuf, source: io::Error },
    #[error("top_n must be at least 1")]
    TopN,
}

/// Where the stores live on disk. Without a stopword file the built-in
/// English list is used.
#[derive(Debug, Clone)]
pub struct StorePaths {
    pub index: PathBuf,
    pub kcores: PathBuf,
    pub ontology: PathBuf,
    pub thesaurus: PathBuf,
    pub stopwords: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServiceConfig {
    pub port: u16,
    /// Results per search when the request has no `n`.
    pub top_n: usize,
    /// Overrides the ontology file's milestone factor.
    pub factor: Option<f64>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            port: DEFAULT_PORT,
            top_n: DEFAULT_TOP_N,
            factor: None,
        }
    }
}

/// Everything a request may read. Never mutated after construction.
#[derive(Debug)]
pub struct ServiceState {
    pub index: TfIdfIndex,
    pub kcores: Vec<KCore>,
    pub graph: OntologyGraph,
    pub thesaurus: Thesaurus,
    pub stopwords: StopwordList,
    pub config: ServiceConfig,
}

impl ServiceState {
    /// Loads all stores; any failure names the offending file.
    pub fn load(paths: &StorePaths, config: ServiceConfig) -> Result<Self, ServiceError> {
        let index = TfIdfIndex::load(&paths.index).map_err(|source| ServiceError::Index {
            path: paths.index.clone(),
            source,
        })?;
        let kcores = load_kcores(&paths.kcores).map_err(|source| ServiceError::KCores {
            path: paths.kcores.clone(),
            source,
        })?;
        let ontology_err = |source| ServiceError::Ontology {
            path: paths.ontology.clone(),
            source,
        };
        let mut graph = OntologyGraph::load(&paths.ontology).map_err(ontology_err)?;
        if let Some(k) = config.factor {
            graph = graph.with_factor(k).map_err(ontology_err)?;
        }
        let thesaurus = Thesaurus::load(&paths.thesaurus).map_err(|source| ServiceError::Thesaurus {
            path: paths.thesaurus.clone(),
            source,
        })?;
        let stopwords = match &paths.stopwords {
            Some(path) => StopwordList::from_file(path).map_err(|source| ServiceError::Stopwords {
                path: path.clone(),
                source,
            })?,
            None => StopwordList::default_english(),
        };
        Self::new(index, kcores, graph, thesaurus, stopwords, config)
    }

    pub fn new(
        index: TfIdfIndex,
        kcores: Vec<KCore>,
        graph: OntologyGraph,
        thesaurus: Thesaurus,
        stopwords: StopwordList,
        config: ServiceConfig,
    ) -> Result<Self, ServiceError> {
        if config.top_n == 0 {
            return Err(ServiceError::TopN);
        }
        Ok(Self {
            index,
            kcores,
            graph,
            thesaurus,
            stopwords,
            config,
        })
    }

    pub fn pipeline(&self) -> Pipeline<'_> {
        Pipeline::new(&self.kcores, &self.graph, &self.thesaurus, &self.stopwords)
    }

    pub fn meta(&self) -> MetaResponse {
        MetaResponse {
            n_docs: self.index.n_docs(),
            vocab_size: self.index.vocab_len(),
            kcore_count: self.kcores.len(),
            concept_count: self.graph.concepts().len(),
            relation_count: self.graph.relations().len(),
            edge_count: self.graph.edges().len(),
            sense_count: self.thesaurus.len(),
            factor: self.graph.factor(),
            top_n: self.config.top_n,
        }
    }

    pub fn candidates(&self, raw: &str) -> Result<CandidateResponse, ApiError> {
        let pipeline = self.pipeline();
        let query = pipeline.parse_query(raw).map_err(ApiError::bad_request)?;
        let c = pipeline.candidates(&query);
        Ok(CandidateResponse {
            query: query.into(),
            senses: c.senses,
            concepts: c.concepts,
            kcores: c.kcores,
        })
    }

    pub fn search(&self, req: &SearchRequest) -> Result<SearchResponse, ApiError> {
        let raw = req.q.as_deref().unwrap_or_default();
        let mode = match req.mode.as_deref().unwrap_or("expanded") {
            "keyword" => Mode::Keyword,
            "expanded" => Mode::Expanded,
            other => return Err(ApiError::bad_request(format!("mode must be keyword or expanded, got `{other}`"))),
        };
        let n = match req.n.as_deref() {
            None => self.config.top_n,
            Some(s) => match s.trim().parse::<usize>() {
                Ok(n) if n >= 1 => n,
                _ => return Err(ApiError::bad_request(format!("n must be a positive integer, got `{s}`"))),
            },
        };
        let nonempty = |v: &Option<String>| v.as_deref().map(str::trim).filter(|s| !s.is_empty()).map(str::to_owned);
        let selection = Selection {
            concept: nonempty(&req.concept),
            sense: nonempty(&req.sense),
        };
        if let Some(id) = &selection.concept {
            if self.graph.concept(id).is_none() {
                return Err(ApiError::bad_request(PipelineError::UnknownConcept(id.clone())));
            }
        }
        if let Some(id) = &selection.sense {
            if self.thesaurus.get(id).is_none() {
                return Err(ApiError::bad_request(PipelineError::UnknownSense(id.clone())));
            }
        }

        let pipeline = self.pipeline();
        let query = pipeline.parse_query(raw).map_err(ApiError::bad_request)?;
        let enriched = match mode {
            Mode::Keyword => EnrichedQuery::identity(&query.terms),
            Mode::Expanded => pipeline.reformulate(&query, &selection).map_err(ApiError::bad_request)?,
        };
        let results = search(&self.index, &enriched, n).map_err(|e| match e {
            EvalError::EmptyQuery | EvalError::ZeroCutoff => ApiError::bad_request(e),
            other => ApiError::internal(other),
        })?;
        let results = results
            .into_iter()
            .enumerate()
            .map(|(i, r)| SearchHit {
                rank: i + 1,
                doc_id: r.doc_id,
                score: r.score,
                source_uri: self
                    .index
                    .document(r.doc_id)
                    .map(|d| d.source_uri.clone())
                    .unwrap_or_default(),
            })
            .collect();
        Ok(SearchResponse {
            mode,
            query: query.into(),
            n,
            results,
            entries: enriched.entries(),
            enriched,
        })
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct QueryEcho {
    pub raw: String,
    pub terms: Vec<String>,
}

impl From<Query> for QueryEcho {
    fn from(q: Query) -> Self {
        Self {
            raw: q.raw,
            terms: q.terms,
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CandidateResponse {
    pub query: QueryEcho,
    pub senses: Vec<TermSenses>,
    pub concepts: Vec<ConceptCandidate>,
    pub kcores: Vec<KCoreMatch>,
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Keyword,
    Expanded,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct SearchRequest {
    pub q: Option<String>,
    pub concept: Option<String>,
    pub sense: Option<String>,
    pub mode: Option<String>,
    pub n: Option<String>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SearchHit {
    pub rank: usize,
    pub doc_id: u32,
    pub score: f64,
    pub source_uri: String,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SearchResponse {
    pub mode: Mode,
    pub query: QueryEcho,
    pub n: usize,
    pub results: Vec<SearchHit>,
    pub enriched: EnrichedQuery,
    /// `term:weight:tag` rendering of `enriched`.
    pub entries: Vec<String>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct MetaResponse {
    pub n_docs: usize,
    pub vocab_size: usize,
    pub kcore_count: usize,
    pub concept_count: usize,
    pub relation_count: usize,
    pub edge_count: usize,
    pub sense_count: usize,
    pub factor: f64,
    pub top_n: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    fn bad_request(e: impl ToString) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            message: e.to_string(),
        }
    }

    fn internal(e: impl ToString) -> Self {
        Self {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            message: e.to_string(),
        }
    }
}

#[derive(Serialize)]
struct ErrorBody {
    error: String,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(ErrorBody { error: self.message })).into_response()
    }
}

#[derive(Debug, Deserialize)]
struct CandidateRequest {
    q: Option<String>,
}

type Shared = Arc<ServiceState>;

async fn candidates(
    State(state): State<Shared>,
    QueryParams(req): QueryParams<CandidateRequest>,
) -> Result<Json<CandidateResponse>, ApiError> {
    state.candidates(req.q.as_deref().unwrap_or_default()).map(Json)
}

async fn search_route(
    State(state): State<Shared>,
    QueryParams(req): QueryParams<SearchRequest>,
) -> Result<Json<SearchResponse>, ApiError> {
    state.search(&req).map(Json)
}

async fn meta(State(state): State<Shared>) -> Json<MetaResponse> {
    Json(state.meta())
}

pub fn router(state: Shared) -> Router {
    let cors = CorsLayer::new().allow_origin(Any).allow_methods([Method::GET]);
    Router::new()
        .route("/api/candidates", get(candidates))
        .route("/api/search", get(search_route))
        .route("/api/meta", get(meta))
        .layer(cors)
        .with_state(state)
}

/// Serves until the listener fails.
pub async fn serve(listener: tokio::net::TcpListener, state: Shared) -> io::Result<()> {
    if let Ok(addr) = listener.local_addr() {
        log::info!("serving on http://{addr}");
    }
    axum::serve(listener, router(state)).await
}
