//! Breadth-first crawler with a FIFO frontier and a persisted crawl table.
//!
//! Pages are fetched through the [`Fetcher`] trait so the frontier logic can
//! be driven by [`HttpFetcher`] or by canned responses.

pub mod html;
mod table;

use std::collections::{HashMap, HashSet, VecDeque};
use std::fs;
use std::io;
use std::path::Path;
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;
use url::Url;

pub use table::{CrawlRecord, CrawlTable};

/// File name of the crawl table inside an output corpus directory.
pub const CRAWL_TABLE_FILE: &str = "crawl_table.tsv";

#[derive(Debug, Error)]
pub enum CrawlError {
    #[error("invalid crawl configuration: {0}")]
    Config(String),
    #[error("crawl table line {line}: {msg}")]
    Table { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone)]
pub struct CrawlConfig {
    pub seeds: Vec<Url>,
    /// Upper bound on successfully fetched pages (not on discovered urls).
    pub max_pages: usize,
    pub same_host_only: bool,
    /// Minimum spacing between two requests to the same host.
    pub delay_ms: u64,
    pub timeout_ms: u64,
    /// Maximum number of requests in flight at once.
    pub concurrency: usize,
}

impl CrawlConfig {
    pub fn new(seeds: Vec<Url>) -> Self {
        Self {
            seeds,
            max_pages: 100,
            same_host_only: true,
            delay_ms: 500,
            timeout_ms: 10_000,
            concurrency: 1,
        }
    }

    fn validate(&self) -> Result<(), CrawlError> {
        let fail = |msg: &str| Err(CrawlError::Config(msg.to_owned()));
        if self.seeds.is_empty() {
            return fail("at least one seed url is required");
        }
        if let Some(bad) = self
            .seeds
            .iter()
            .find(|u| !matches!(u.scheme(), "http" | "https"))
        {
            return Err(CrawlError::Config(format!("seed {bad} is not an http(s) url")));
        }
        if self.max_pages == 0 {
            return fail("max_pages must be at least 1");
        }
        if self.timeout_ms == 0 {
            return fail("timeout_ms must be positive");
        }
        if self.concurrency == 0 {
            return fail("concurrency must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchedPage {
    pub serial: u64,
    pub url: Url,
    pub status: u16,
    pub extracted_text: String,
    pub links: Vec<Url>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Response {
    pub status: u16,
    pub body: String,
}

pub trait Fetcher: Sync {
    /// Performs one GET. Transport failures are `Err`; any HTTP status,
    /// including errors, is `Ok`.
    fn fetch(&self, url: &Url) -> Result<Response, String>;
}

/// Blocking HTTP fetcher.
pub struct HttpFetcher {
    agent: ureq::Agent,
}

impl HttpFetcher {
    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .user_agent(concat!("ontosearch-crawler/", env!("CARGO_PKG_VERSION")))
            .build()
            .into();
        Self { agent }
    }
}

impl Fetcher for HttpFetcher {
    fn fetch(&self, url: &Url) -> Result<Response, String> {
        let mut resp = self.agent.get(url.as_str()).call().map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let body = resp
            .body_mut()
            .with_config()
            .limit(16 * 1024 * 1024)
            .lossy_utf8(true)
            .read_to_string()
            .map_err(|e| e.to_string())?;
        Ok(Response { status, body })
    }
}

#[derive(Debug, Clone, Default)]
pub struct CrawlOutcome {
    pub pages: Vec<FetchedPage>,
    pub table: CrawlTable,
    /// One line per failed fetch.
    pub notes: Vec<String>,
}

impl CrawlOutcome {
    /// Writes one `page-NNNNNN.txt` per fetched page (numbered by serial) and
    /// the crawl table into `dir`, which becomes a corpus directory.
    pub fn write_corpus(&self, dir: impl AsRef<Path>) -> Result<(), CrawlError> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        for page in &self.pages {
            fs::write(
                dir.join(format!("page-{:06}.txt", page.serial)),
                &page.extracted_text,
            )?;
        }
        self.table.save(dir.join(CRAWL_TABLE_FILE))
    }
}

/// Per-host request spacing shared by concurrent fetches.
struct Politeness {
    delay: Duration,
    next_slot: Mutex<HashMap<String, Instant>>,
}

impl Politeness {
    fn new(delay: Duration) -> Self {
        Self {
            delay,
            next_slot: Mutex::new(HashMap::new()),
        }
    }

    fn wait_turn(&self, url: &Url) {
        if self.delay.is_zero() {
            return;
        }
        let host = url.host_str().unwrap_or_default().to_owned();
        let slot = {
            let mut slots = self.next_slot.lock().unwrap_or_else(|e| e.into_inner());
            let now = Instant::now();
            let slot = slots.get(&host).map_or(now, |&s| s.max(now));
            slots.insert(host, slot + self.delay);
            slot
        };
        let now = Instant::now();
        if slot > now {
            thread::sleep(slot - now);
        }
    }
}

fn normalize(url: &Url) -> Url {
    let mut url = url.clone();
    url.set_fragment(None);
    url
}

/// Crawls breadth-first from the seeds.
///
/// Discovered links are appended to the end of the frontier and each url is
/// enqueued at most once. With `concurrency > 1` a batch of frontier entries
/// is fetched in parallel, but results are applied in frontier order so the
/// table is the same as a sequential crawl.
pub fn crawl(config: &CrawlConfig, fetcher: &dyn Fetcher) -> Result<CrawlOutcome, CrawlError> {
    config.validate()?;

    let mut outcome = CrawlOutcome::default();
    let mut known: HashSet<String> = HashSet::new();
    let mut frontier: VecDeque<(usize, Url)> = VecDeque::new();

    let mut enqueue = |url: Url, table: &mut CrawlTable, frontier: &mut VecDeque<(usize, Url)>| {
        if known.insert(url.as_str().to_owned()) {
            let pos = table.push(url.as_str().to_owned());
            frontier.push_back((pos, url));
        }
    };
    for seed in &config.seeds {
        enqueue(normalize(seed), &mut outcome.table, &mut frontier);
    }

    let politeness = Politeness::new(Duration::from_millis(config.delay_ms));
    let fetch_one = |url: &Url| {
        politeness.wait_turn(url);
        fetcher.fetch(url)
    };

    let mut fetched = 0usize;
    while fetched < config.max_pages && !frontier.is_empty() {
        let room = (config.max_pages - fetched).min(config.concurrency);
        let batch: Vec<(usize, Url)> = frontier.drain(..room.min(frontier.len())).collect();

        let results: Vec<Result<Response, String>> = if batch.len() == 1 {
            vec![fetch_one(&batch[0].1)]
        } else {
            thread::scope(|s| {
                let handles: Vec<_> = batch
                    .iter()
                    .map(|(_, url)| s.spawn(|| fetch_one(url)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().unwrap_or_else(|_| Err("fetch thread panicked".into())))
                    .collect()
            })
        };

        for ((pos, url), result) in batch.into_iter().zip(results) {
            let resp = match result {
                Ok(resp) if (200..300).contains(&resp.status) => resp,
                Ok(resp) => {
                    let note = format!("{url}: HTTP {}", resp.status);
                    log::warn!("crawl: {note}");
                    outcome.notes.push(note);
                    continue;
                }
                Err(err) => {
                    let note = format!("{url}: {err}");
                    log::warn!("crawl: {note}");
                    outcome.notes.push(note);
                    continue;
                }
            };

            let (text, links) = html::extract_text_and_links(&resp.body, &url);
            outcome.table.mark_crawled(pos);
            fetched += 1;
            for link in &links {
                if config.same_host_only && link.host_str() != url.host_str() {
                    continue;
                }
                enqueue(link.clone(), &mut outcome.table, &mut frontier);
            }
            outcome.pages.push(FetchedPage {
                serial: outcome.table.records()[pos].serial,
                url,
                status: resp.status,
                extracted_text: text,
                links,
            });
        }
    }
    Ok(outcome)
}
