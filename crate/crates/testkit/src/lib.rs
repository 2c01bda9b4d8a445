//! Shared test support: fixture paths and a tiny static HTTP server.

use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Instant;

/// The repository's `fixtures/` directory.
pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture(name: &str) -> PathBuf {
    fixtures_dir().join(name)
}

pub fn read_fixture(name: &str) -> String {
    let path = fixture(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// The two disjoint topics planted by [`planted_corpus`].
pub const PLANTED_TOPICS: [[&str; 4]; 2] = [
    ["alpha", "bravo", "charlie", "delta"],
    ["echo", "foxtrot", "golf", "hotel"],
];

const PLANTED_NOISE: [&str; 12] = [
    "india", "juliet", "kilo", "lima", "mike", "november", "oscar", "papa", "quebec", "romeo",
    "sierra", "tango",
];

/// Twelve short documents: each planted topic appears in full in five of
/// them, the topics never share a document, and every document adds one
/// noise word used nowhere else.
pub fn planted_corpus() -> Vec<String> {
    let mut docs = Vec::new();
    let mut noise = PLANTED_NOISE.iter();
    for i in 0..5 {
        for topic in &PLANTED_TOPICS {
            let mut words: Vec<&str> = topic.to_vec();
            words.rotate_left(i % 4);
            words.push(noise.next().unwrap());
            docs.push(words.join(" "));
        }
    }
    for word in noise {
        docs.push(format!("{word} {word}"));
    }
    docs
}

/// One request seen by [`FixtureServer`].
#[derive(Debug, Clone)]
pub struct Hit {
    pub path: String,
    pub status: u16,
    pub at: Instant,
}

/// Serves files from a directory over HTTP/1.0 on 127.0.0.1. Unknown paths
/// get 404. Every request is logged.
pub struct FixtureServer {
    addr: SocketAddr,
    log: Arc<Mutex<Vec<Hit>>>,
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl FixtureServer {
    pub fn serve(root: impl Into<PathBuf>) -> Self {
        let root = root.into();
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind fixture server");
        let addr = listener.local_addr().unwrap();
        let log = Arc::new(Mutex::new(Vec::new()));
        let stop = Arc::new(AtomicBool::new(false));
        let handle = {
            let log = Arc::clone(&log);
            let stop = Arc::clone(&stop);
            thread::spawn(move || {
                for stream in listener.incoming() {
                    if stop.load(Ordering::SeqCst) {
                        break;
                    }
                    if let Ok(stream) = stream {
                        let root = root.clone();
                        let log = Arc::clone(&log);
                        thread::spawn(move || handle(stream, &root, &log));
                    }
                }
            })
        };
        Self {
            addr,
            log,
            stop,
            handle: Some(handle),
        }
    }

    /// Serves `fixtures/site`.
    pub fn site() -> Self {
        Self::serve(fixture("site"))
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self, path: &str) -> String {
        format!("http://{}/{}", self.addr, path.trim_start_matches('/'))
    }

    pub fn hits(&self) -> Vec<Hit> {
        self.log.lock().unwrap().clone()
    }

    pub fn paths(&self) -> Vec<String> {
        self.hits().into_iter().map(|h| h.path).collect()
    }
}

impl Drop for FixtureServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn handle(stream: TcpStream, root: &Path, log: &Mutex<Vec<Hit>>) {
    let mut reader = BufReader::new(&stream);
    let mut request_line = String::new();
    if reader.read_line(&mut request_line).is_err() {
        return;
    }
    // drain headers
    let mut line = String::new();
    while reader.read_line(&mut line).map(|n| n > 2).unwrap_or(false) {
        line.clear();
    }
    let path = request_line.split_whitespace().nth(1).unwrap_or("/").to_owned();
    let rel = path.split(['?', '#']).next().unwrap_or("").trim_start_matches('/');
    let file = (!rel.is_empty() && !rel.split('/').any(|s| s == ".."))
        .then(|| root.join(rel))
        .filter(|p| p.is_file());
    let (status, body) = match file.and_then(|p| std::fs::read(p).ok()) {
        Some(body) => (200, body),
        None => (404, b"<html><body>not found</body></html>".to_vec()),
    };
    log.lock().unwrap().push(Hit {
        path: path.clone(),
        status,
        at: Instant::now(),
    });
    let reason = if status == 200 { "OK" } else { "Not Found" };
    let mut out = &stream;
    let _ = write!(
        out,
        "HTTP/1.0 {status} {reason}\r\nContent-Type: text/html; charset=utf-8\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        body.len()
    );
    let _ = out.write_all(&body);
    let _ = out.flush();
}
