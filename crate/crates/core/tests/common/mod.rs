//! Shared test support: fixture paths, slow-path metric oracles and a tiny
//! HTTP stub server.

#![allow(dead_code)]

pub mod oracle;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use capharness::metrics::EvalPair;
use serde::Deserialize;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

#[derive(Debug, Clone, Deserialize)]
pub struct CorpusEntry {
    pub sample_id: String,
    pub candidate: String,
    pub references: Vec<String>,
}

pub fn metric_corpus() -> Vec<CorpusEntry> {
    let text = std::fs::read_to_string(fixture("metric_corpus.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

pub fn eval_pairs(entries: &[CorpusEntry]) -> Vec<EvalPair> {
    entries.iter().map(|e| EvalPair::from_text(e.sample_id.clone(), &e.candidate, &e.references).unwrap()).collect()
}

/// Every regular file under `root`, keyed by its relative path.
pub fn read_tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(dir: &Path, root: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        let mut entries: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(&p, root, out);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

/// What a stub handler saw.
#[derive(Debug, Clone)]
pub struct StubRequest {
    pub method: String,
    pub url: String,
    pub body: String,
}

pub type Handler = dyn Fn(&StubRequest) -> (u16, String) + Send + Sync;

/// Serves requests on a background thread until the process exits.
/// Returns the base URL, e.g. `http://127.0.0.1:41234`.
pub fn spawn_stub(handler: Arc<Handler>) -> String {
    let server = tiny_http::Server::http("127.0.0.1:0").unwrap();
    let addr = server.server_addr().to_ip().unwrap();
    std::thread::spawn(move || {
        for mut req in server.incoming_requests() {
            let mut body = String::new();
            let _ = req.as_reader().read_to_string(&mut body);
            let seen = StubRequest { method: req.method().to_string(), url: req.url().to_string(), body };
            let (status, text) = handler(&seen);
            let header = tiny_http::Header::from_bytes("Content-Type", "application/json").unwrap();
            let _ = req.respond(tiny_http::Response::from_string(text).with_status_code(status).with_header(header));
        }
    });
    format!("http://{addr}")
}

/// A port with nothing listening on it.
pub fn dead_endpoint() -> String {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    format!("http://{addr}")
}
