use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use ontosearch::eval::load_qrels;
use ontosearch::index::{load_corpus_dir, TfIdfIndex};
use ontosearch::kcore::load_kcores;
use ontosearch::ontology::OntologyGraph;
use ontosearch::text::StopwordList;
use ontosearch::thesaurus::Thesaurus;
use ontosearch_server::{router, ServiceConfig, ServiceError, ServiceState, StorePaths};
use ontosearch_testkit::fixture;
use serde_json::Value;
use tower::ServiceExt;

fn state_with(thesaurus: Thesaurus) -> Arc<ServiceState> {
    let stopwords = StopwordList::from_file(fixture("stopwords.txt")).unwrap();
    let index = TfIdfIndex::build(&load_corpus_dir(fixture("carcinoma/corpus")).unwrap(), &stopwords).unwrap();
    Arc::new(
        ServiceState::new(
            index,
            load_kcores(fixture("kcores.tsv")).unwrap(),
            OntologyGraph::load(fixture("ontology.txt")).unwrap(),
            thesaurus,
            stopwords,
            ServiceConfig::default(),
        )
        .unwrap(),
    )
}

fn state() -> Arc<ServiceState> {
    state_with(Thesaurus::load(fixture("thesaurus.txt")).unwrap())
}

async fn get(state: &Arc<ServiceState>, uri: &str) -> (StatusCode, Value) {
    let response = router(state.clone())
        .oneshot(Request::get(uri).body(Body::empty()).unwrap())
        .await
        .unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap())
}

fn doc_ids(v: &Value) -> Vec<u64> {
    v["results"].as_array().unwrap().iter().map(|r| r["doc_id"].as_u64().unwrap()).collect()
}

#[tokio::test]
async fn candidates_equal_direct_pipeline_output() {
    let s = state();
    let (status, body) = get(&s, "/api/candidates?q=cancer").await;
    assert_eq!(status, StatusCode::OK);
    let p = s.pipeline();
    let c = p.candidates(&p.parse_query("cancer").unwrap());
    assert_eq!(body["senses"], serde_json::to_value(&c.senses).unwrap());
    assert_eq!(body["concepts"], serde_json::to_value(&c.concepts).unwrap());
    assert_eq!(body["kcores"], serde_json::to_value(&c.kcores).unwrap());
    assert_eq!(body["query"]["terms"], serde_json::json!(["cancer"]));
    assert_eq!(body["concepts"][0]["concept_id"], "cancer");
    assert_eq!(body["kcores"].as_array().unwrap().len(), 3);
}

#[tokio::test]
async fn unknown_terms_give_empty_lists() {
    let (status, body) = get(&state(), "/api/candidates?q=zebra").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["kcores"], serde_json::json!([]));
    assert_eq!(body["concepts"], serde_json::json!([]));
}

#[tokio::test]
async fn empty_queries_are_rejected() {
    let s = state();
    for uri in ["/api/candidates?q=%20", "/api/candidates", "/api/search?q=the%20of", "/api/search"] {
        let (status, body) = get(&s, uri).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{uri}");
        assert!(body["error"].as_str().is_some_and(|e| !e.is_empty()), "{uri}");
    }
}

#[tokio::test]
async fn bad_parameters_are_rejected() {
    let s = state();
    for uri in [
        "/api/search?q=cancer&concept=ghost",
        "/api/search?q=cancer&sense=ghost.n.01",
        "/api/search?q=cancer&mode=fuzzy",
        "/api/search?q=cancer&n=0",
        "/api/search?q=cancer&n=ten",
        "/api/search?q=cancer&mode=keyword&concept=ghost",
    ] {
        let (status, body) = get(&s, uri).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{uri}: {body}");
    }
}

#[tokio::test]
async fn arms_agree_without_a_selection() {
    let s = state();
    let (_, keyword) = get(&s, "/api/search?q=cancer%20treatment&mode=keyword").await;
    let (_, expanded) = get(&s, "/api/search?q=cancer%20treatment").await;
    assert_eq!(keyword["results"], expanded["results"]);
    assert_eq!(expanded["mode"], "expanded");
    assert_eq!(keyword["mode"], "keyword");
}

#[tokio::test]
async fn concept_expansion_reaches_carcinoma_documents() {
    let s = state();
    let qrels = load_qrels(fixture("carcinoma/qrels.tsv"), &s.index).unwrap();
    let relevant = &qrels["q1"].relevant;
    let recall = |v: &Value| doc_ids(v).iter().filter(|&&d| relevant.contains(&(d as u32))).count();

    let (status, keyword) = get(&s, "/api/search?q=cancer&mode=keyword").await;
    assert_eq!(status, StatusCode::OK);
    let (status, expanded) = get(&s, "/api/search?q=cancer&concept=cancer&mode=expanded").await;
    assert_eq!(status, StatusCode::OK);
    assert!(recall(&expanded) >= recall(&keyword));
    assert!(!doc_ids(&keyword).contains(&1));
    assert!(doc_ids(&expanded).contains(&1));
    assert_eq!(expanded["enriched"]["chosen_concept"], "cancer");
    let entries: Vec<&str> = expanded["entries"].as_array().unwrap().iter().map(|e| e.as_str().unwrap()).collect();
    assert!(entries.contains(&"carcinoma:1.000000:concept-synonym"), "{entries:?}");

    let hits = expanded["results"].as_array().unwrap();
    for (i, h) in hits.iter().enumerate() {
        assert_eq!(h["rank"], i + 1);
        assert!(h["source_uri"].as_str().unwrap().ends_with(".txt"));
    }
    let scores: Vec<f64> = hits.iter().map(|h| h["score"].as_f64().unwrap()).collect();
    assert!(scores.windows(2).all(|w| w[0] >= w[1]));
}

#[tokio::test]
async fn n_limits_the_results() {
    let s = state();
    let (_, body) = get(&s, "/api/search?q=cancer&concept=cancer&n=2").await;
    assert_eq!(doc_ids(&body).len(), 2);
    assert_eq!(body["n"], 2);
}

#[tokio::test]
async fn meta_reports_store_sizes() {
    let s = state();
    let (status, body) = get(&s, "/api/meta").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["n_docs"], 12);
    assert_eq!(body["vocab_size"], s.index.vocab_len());
    assert_eq!(body["kcore_count"], 3);
    assert_eq!(body["concept_count"], 4);
    assert_eq!(body["relation_count"], 3);
    assert_eq!(body["edge_count"], 3);
    assert_eq!(body["sense_count"], s.thesaurus.len());
    assert_eq!(body["factor"], 2.0);
    assert_eq!(body["top_n"], 10);

    let bare = state_with(Thesaurus::parse("").unwrap());
    let (_, body) = get(&bare, "/api/meta").await;
    assert_eq!(body["sense_count"], 0);
    let (status, body) = get(&bare, "/api/candidates?q=cell%20cancer").await;
    assert_eq!(status, StatusCode::OK);
    assert!(body["senses"].as_array().unwrap().iter().all(|t| t["candidates"] == serde_json::json!([])));
}

#[tokio::test]
async fn replies_do_not_depend_on_history() {
    let s = state();
    let uris = [
        "/api/search?q=breast%20cancer&concept=breast_cancer&sense=cancer.n.01",
        "/api/candidates?q=cell%20biology",
        "/api/search?q=cancer&mode=keyword",
    ];
    let mut first = Vec::new();
    for uri in uris {
        first.push(get(&s, uri).await);
    }
    for (uri, want) in uris.iter().rev().zip(first.iter().rev()) {
        assert_eq!(&get(&s, uri).await, want, "{uri}");
    }
}

#[tokio::test]
async fn cross_origin_reads_are_allowed() {
    let response = router(state())
        .oneshot(
            Request::get("/api/meta")
                .header("origin", "http://localhost:5173")
                .body(Body::empty())
                .unwrap(),
        )
        .await
        .unwrap();
    assert_eq!(response.headers()["access-control-allow-origin"], "*");
}

#[test]
fn loading_fails_on_any_bad_store() {
    let good = StorePaths {
        index: fixture("missing.idx"),
        kcores: fixture("kcores.tsv"),
        ontology: fixture("ontology.txt"),
        thesaurus: fixture("thesaurus.txt"),
        stopwords: Some(fixture("stopwords.txt")),
    };
    let e = ServiceState::load(&good, ServiceConfig::default()).unwrap_err();
    assert!(matches!(e, ServiceError::Index { .. }));

    let dir = tempfile::tempdir().unwrap();
    let idx = dir.path().join("corpus.idx");
    let s = state();
    s.index.save(&idx).unwrap();
    let paths = StorePaths { index: idx, ..good };
    assert!(ServiceState::load(&paths, ServiceConfig::default()).is_ok());

    let bad_ontology = StorePaths {
        ontology: fixture("kcores.tsv"),
        ..paths.clone()
    };
    assert!(matches!(
        ServiceState::load(&bad_ontology, ServiceConfig::default()),
        Err(ServiceError::Ontology { .. })
    ));
    let zero = ServiceConfig {
        top_n: 0,
        ..ServiceConfig::default()
    };
    assert!(matches!(ServiceState::load(&paths, zero), Err(ServiceError::TopN)));
}
