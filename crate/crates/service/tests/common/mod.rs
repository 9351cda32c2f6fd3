#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use eventlens::corpus::{IndexConfig, IngestConfig};
use eventlens::engine::{ingest_sources, Snapshot, SourcePaths};
use eventlens_service::{spawn, AppState, Envelope, ServiceConfig};
use serde::Serialize;
use serde_json::Value;
use tempfile::TempDir;

pub fn fixtures() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures"))
}

fn build(corpus: &Path) -> Snapshot {
    let f = fixtures();
    let (corpus, h, testbeds, _) = ingest_sources(
        &SourcePaths {
            corpus,
            catalog: &f.join("catalog.jsonl"),
            gazetteer: &f.join("gazetteer.jsonl"),
            testbeds: Some(&f.join("testbeds")),
        },
        &IngestConfig::default(),
    )
    .expect("fixture ingests");
    Snapshot::build(corpus, h, testbeds, &IndexConfig::default())
}

/// The olympics fixture saved to a fresh directory.
pub fn fixture_snapshot() -> (TempDir, Snapshot) {
    let dir = tempfile::tempdir().unwrap();
    let s = build(&fixtures().join("olympics-mini.jsonl"));
    s.save(dir.path()).unwrap();
    let loaded = Snapshot::load(dir.path()).unwrap();
    (dir, loaded)
}

/// The fixture without its last record: a second, different snapshot.
pub fn trimmed_snapshot() -> (TempDir, Snapshot) {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixtures().join("olympics-mini.jsonl")).unwrap();
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    let src = dir.path().join("source.jsonl");
    std::fs::write(&src, lines[..lines.len() - 1].join("\n")).unwrap();
    let s = build(&src);
    let snap = dir.path().join("snap");
    s.save(&snap).unwrap();
    let loaded = Snapshot::load(&snap).unwrap();
    (dir, loaded)
}

pub fn snapshot_dir(d: &TempDir) -> PathBuf {
    let nested = d.path().join("snap");
    if nested.is_dir() {
        nested
    } else {
        d.path().to_path_buf()
    }
}

pub struct Server {
    pub base: String,
    pub state: Arc<AppState>,
    pub client: reqwest::Client,
}

impl Server {
    pub async fn start(dir: &Path) -> Server {
        let snapshot = Snapshot::load(dir).unwrap();
        let state = AppState::new(snapshot, dir.to_path_buf(), ServiceConfig::default());
        let (addr, _) = spawn(state.clone(), "127.0.0.1:0".parse().unwrap()).await.unwrap();
        Server {
            base: format!("http://{addr}"),
            state,
            client: reqwest::Client::new(),
        }
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }

    pub async fn get(&self, path: &str, query: &[(&str, String)]) -> (u16, Value) {
        let r = self.client.get(self.url(path)).query(query).send().await.unwrap();
        (r.status().as_u16(), r.json().await.unwrap())
    }

    pub async fn post_json<B: Serialize>(&self, path: &str, body: &B) -> (u16, Value) {
        let r = self.client.post(self.url(path)).json(body).send().await.unwrap();
        (r.status().as_u16(), r.json().await.unwrap())
    }

    pub async fn post_text(&self, path: &str, query: &[(&str, String)], body: &str) -> (u16, Value) {
        let r = self
            .client
            .post(self.url(path))
            .query(query)
            .header("content-type", "text/plain")
            .body(body.to_string())
            .send()
            .await
            .unwrap();
        (r.status().as_u16(), r.json().await.unwrap())
    }
}

/// A library result as it reads after one trip through JSON text, which is
/// what the service sends.
pub fn as_wire<T: Serialize>(value: &T) -> Value {
    serde_json::from_str(&serde_json::to_string(value).unwrap()).unwrap()
}

pub fn envelope(v: Value) -> Envelope<Value> {
    serde_json::from_value(v).expect("envelope")
}

pub fn by_version(snapshots: &[&Snapshot]) -> BTreeMap<String, Snapshot> {
    snapshots.iter().map(|s| (s.version.clone(), (*s).clone())).collect()
}
