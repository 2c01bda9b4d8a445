use std::time::Duration;

use ontosearch::crawler::{crawl, CrawlConfig, CrawlTable, HttpFetcher, CRAWL_TABLE_FILE};
use ontosearch::index::{load_corpus_dir, TfIdfIndex};
use ontosearch::text::StopwordList;
use ontosearch_testkit::FixtureServer;
use url::Url;

fn config(server: &FixtureServer, seed: &str) -> CrawlConfig {
    let mut c = CrawlConfig::new(vec![Url::parse(&server.url(seed)).unwrap()]);
    c.delay_ms = 0;
    c.timeout_ms = 5_000;
    c
}

fn fetcher() -> HttpFetcher {
    HttpFetcher::new(Duration::from_secs(5))
}

#[test]
fn missing_seed_leaves_one_unfetched_record() {
    let server = FixtureServer::site();
    let outcome = crawl(&config(&server, "missing.html"), &fetcher()).unwrap();
    assert!(outcome.pages.is_empty());
    assert_eq!(outcome.table.len(), 1);
    assert!(!outcome.table.records()[0].is_crawled);
    assert_eq!(outcome.notes.len(), 1);
}

#[test]
fn unreachable_host_is_noted() {
    let server = FixtureServer::site();
    let addr = server.addr();
    drop(server);
    let mut c = CrawlConfig::new(vec![Url::parse(&format!("http://{addr}/cancer.html")).unwrap()]);
    c.timeout_ms = 2_000;
    let outcome = crawl(&c, &HttpFetcher::new(Duration::from_secs(2))).unwrap();
    assert!(outcome.pages.is_empty());
    assert_eq!(outcome.notes.len(), 1);
}

#[test]
fn external_and_mailto_links_are_not_followed() {
    let server = FixtureServer::site();
    let outcome = crawl(&config(&server, "cancer.html"), &fetcher()).unwrap();
    let first = &outcome.pages[0];
    assert!(first.links.iter().any(|l| l.host_str() == Some("example.org")));
    assert!(first.links.iter().all(|l| l.scheme() == "http"));
    assert!(outcome.table.records().iter().all(|r| !r.url.contains("example.org")));
    assert!(first.extracted_text.starts_with("Cancer Cancer Cancer is a disease"));
    assert!(!first.extracted_text.contains("visits"));
}

#[test]
fn cross_host_links_are_recorded_when_allowed() {
    let server = FixtureServer::site();
    let mut c = config(&server, "cancer.html");
    c.same_host_only = false;
    c.max_pages = 6;
    let outcome = crawl(&c, &fetcher()).unwrap();
    let external = outcome.table.get("http://example.org/cancer-society").unwrap();
    assert!(!external.is_crawled);
    assert_eq!(outcome.pages.len(), 6);
}

#[test]
fn politeness_spaces_requests_to_one_host() {
    let server = FixtureServer::site();
    let mut c = config(&server, "cancer.html");
    c.delay_ms = 40;
    c.max_pages = 4;
    crawl(&c, &fetcher()).unwrap();
    let hits = server.hits();
    assert_eq!(hits.len(), 4);
    for w in hits.windows(2) {
        let gap = w[1].at.duration_since(w[0].at);
        assert!(gap >= Duration::from_millis(35), "gap {gap:?}");
    }
}

#[test]
fn concurrent_crawl_matches_sequential() {
    let sequential = {
        let server = FixtureServer::site();
        let outcome = crawl(&config(&server, "cancer.html"), &fetcher()).unwrap();
        outcome.table.to_tsv().replace(&server.addr().to_string(), "HOST")
    };
    let server = FixtureServer::site();
    let mut c = config(&server, "cancer.html");
    c.concurrency = 4;
    let outcome = crawl(&c, &fetcher()).unwrap();
    assert_eq!(outcome.table.to_tsv().replace(&server.addr().to_string(), "HOST"), sequential);
    assert_eq!(server.hits().len(), 6);
}

#[test]
fn crawl_output_is_an_indexable_corpus() {
    let server = FixtureServer::site();
    let outcome = crawl(&config(&server, "cancer.html"), &fetcher()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    outcome.write_corpus(dir.path()).unwrap();
    let table = CrawlTable::load(dir.path().join(CRAWL_TABLE_FILE)).unwrap();
    assert_eq!(table, outcome.table);
    let corpus = load_corpus_dir(dir.path()).unwrap();
    assert_eq!(corpus.len(), 6);
    let index = TfIdfIndex::build(&corpus, &StopwordList::default_english()).unwrap();
    assert_eq!(index.df("cancer"), 6);
    assert!(index.df("oncogene") >= 2);
}
