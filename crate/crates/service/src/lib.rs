//! HTTP front end over an eventlens snapshot.
//!
//! Every analytic endpoint wraps the corresponding [`Snapshot`] method in an
//! [`Envelope`] tagged with the snapshot version the request ran against.

mod config;
mod error;

pub use config::{ServiceConfig, PORT_ENV, SNAPSHOT_ENV};
pub use error::ApiError;

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Query, State};
use axum::http::header::CONTENT_TYPE;
use axum::http::HeaderMap;
use axum::routing::{get, post};
use axum::{Json, Router};
use eventlens::annotations::{GeoLevel, TimeLevel};
use eventlens::engine::{
    CubeRequest, DiversifyRequest, EngineError, EvalRequest, MineRequest, SearchRequest, Snapshot, SummarizeRequest,
};
use eventlens::miner::MinerParams;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;
use tokio::task::JoinHandle;

/// Successful response body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub version: String,
    pub data: T,
    /// Set when a response cap cut the result.
    #[serde(default)]
    pub truncated: bool,
}

pub struct AppState {
    snapshot: RwLock<Arc<Snapshot>>,
    path: tokio::sync::Mutex<PathBuf>,
    config: ServiceConfig,
}

impl AppState {
    pub fn new(snapshot: Snapshot, path: PathBuf, config: ServiceConfig) -> Arc<Self> {
        Arc::new(Self {
            snapshot: RwLock::new(Arc::new(snapshot)),
            path: tokio::sync::Mutex::new(path),
            config,
        })
    }

    /// The snapshot a request runs against; later reloads do not affect it.
    pub fn current(&self) -> Arc<Snapshot> {
        self.snapshot.read().expect("snapshot lock").clone()
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    /// Loads the snapshot at `path` (or the current path) and swaps it in.
    /// On failure the old snapshot stays in place.
    pub async fn reload(&self, path: Option<PathBuf>) -> Result<ReloadReport, ApiError> {
        let mut current_path = self.path.lock().await;
        let target = path.unwrap_or_else(|| current_path.clone());
        let load_path = target.clone();
        let loaded = tokio::task::spawn_blocking(move || Snapshot::load(&load_path))
            .await
            .map_err(|e| ApiError::new("internal", e.to_string()))?;
        let snapshot = match loaded {
            Ok(s) => s,
            Err(e) => {
                tracing::warn!(path = %target.display(), error = %e, "reload rejected");
                return Err(e.into());
            }
        };
        let version = snapshot.version.clone();
        let previous = std::mem::replace(&mut *self.snapshot.write().expect("snapshot lock"), Arc::new(snapshot));
        tracing::info!(path = %target.display(), from = %previous.version, to = %version, "snapshot reloaded");
        *current_path = target.clone();
        Ok(ReloadReport {
            version,
            previous_version: previous.version.clone(),
            path: target.display().to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReloadReport {
    pub version: String,
    pub previous_version: String,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub version: String,
    pub documents: usize,
    pub units: usize,
    pub testbeds: Vec<String>,
}

type ApiResult<T> = Result<Json<Envelope<T>>, ApiError>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/search", get(search))
        .route("/events/mine", post(mine))
        .route("/events", get(events))
        .route("/cube/build", post(cube_build))
        .route("/cube/pipeline", post(cube_pipeline))
        .route("/diversify", post(diversify))
        .route("/summarize", post(summarize))
        .route("/eval/run", post(eval_run))
        .route("/admin/reload", post(reload))
        .with_state(state)
}

/// Binds `addr` and serves in the background; returns the bound address.
pub async fn spawn(state: Arc<AppState>, addr: SocketAddr) -> std::io::Result<(SocketAddr, JoinHandle<()>)> {
    let listener = TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    let handle = tokio::spawn(async move {
        if let Err(e) = axum::serve(listener, router(state)).await {
            tracing::error!(error = %e, "server stopped");
        }
    });
    Ok((local, handle))
}

/// Loads the configured snapshot and serves until interrupted.
pub async fn serve(config: ServiceConfig) -> anyhow::Result<()> {
    let path = config.snapshot.clone();
    let snapshot = {
        let p = path.clone();
        tokio::task::spawn_blocking(move || Snapshot::load(&p)).await??
    };
    tracing::info!(path = %path.display(), version = %snapshot.version, "snapshot loaded");
    let addr = SocketAddr::new(config.host, config.port);
    let state = AppState::new(snapshot, path, config);
    let listener = TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

/// Runs an engine call off the async workers against one snapshot.
async fn run<T, F>(state: &AppState, f: F) -> Result<(String, T), ApiError>
where
    T: Send + 'static,
    F: FnOnce(&Snapshot) -> Result<T, EngineError> + Send + 'static,
{
    let snapshot = state.current();
    let version = snapshot.version.clone();
    let out = tokio::task::spawn_blocking(move || f(&snapshot))
        .await
        .map_err(|e| ApiError::new("internal", e.to_string()))??;
    Ok((version, out))
}

fn envelope<T>((version, data): (String, T), truncated: bool) -> Json<Envelope<T>> {
    Json(Envelope {
        version,
        data,
        truncated,
    })
}

/// An empty body means all defaults.
fn parse_json<T: DeserializeOwned + Default>(body: &[u8]) -> Result<T, ApiError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid JSON body: {e}")))
}

fn parse_query<T>(q: Result<Query<T>, QueryRejection>) -> Result<T, ApiError> {
    q.map(|Query(t)| t).map_err(|e| ApiError::bad_request(e.body_text()))
}

async fn health(State(state): State<Arc<AppState>>) -> Json<Health> {
    let s = state.current();
    Json(Health {
        status: "ok".into(),
        version: s.version.clone(),
        documents: s.corpus.documents.len(),
        units: s.corpus.units().count(),
        testbeds: s.testbeds.keys().cloned().collect(),
    })
}

/// Query-string form of a search: free text plus separate filter parameters.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct SearchParamsQuery {
    pub q: Option<String>,
    /// `begin,end` dates.
    pub time: Option<String>,
    /// `lat,lon` or `minlat,minlon,maxlat,maxlon`.
    pub geo: Option<String>,
    /// Comma-separated entity ids.
    pub entity: Option<String>,
    pub n: Option<usize>,
}

impl SearchParamsQuery {
    /// The equivalent query text.
    pub fn query_text(&self) -> String {
        let mut parts: Vec<String> = self.q.iter().filter(|q| !q.trim().is_empty()).cloned().collect();
        if let Some(t) = self.time.as_deref().filter(|s| !s.is_empty()) {
            parts.push(format!("time:[{t}]"));
        }
        if let Some(g) = self.geo.as_deref().filter(|s| !s.is_empty()) {
            if g.split(',').count() == 2 {
                parts.push(format!("geo:({g})"));
            } else {
                parts.push(format!("geo:[{g}]"));
            }
        }
        if let Some(e) = self.entity.as_deref().filter(|s| !s.is_empty()) {
            parts.push(format!("entity:{{{e}}}"));
        }
        parts.join(" ")
    }
}

/// Clamps `n` to the configured maximum; reports whether it was cut.
pub fn capped_search_request(q: &SearchParamsQuery, max_results: usize) -> (SearchRequest, bool) {
    let mut req = SearchRequest {
        q: q.query_text(),
        ..SearchRequest::default()
    };
    let n = q.n.unwrap_or(req.params.n);
    req.params.n = n.min(max_results);
    (req, n > max_results)
}

async fn search(
    State(state): State<Arc<AppState>>,
    q: Result<Query<SearchParamsQuery>, QueryRejection>,
) -> ApiResult<eventlens::search::ResultSet> {
    let (req, truncated) = capped_search_request(&parse_query(q)?, state.config.max_results);
    Ok(envelope(run(&state, move |s| s.search(&req)).await?, truncated))
}

async fn mine_records(state: &AppState, req: MineRequest) -> ApiResult<Vec<eventlens::miner::EventRecord>> {
    Ok(envelope(run(state, move |s| s.mine_records(&req)).await?, false))
}

async fn mine(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<Vec<eventlens::miner::EventRecord>> {
    mine_records(&state, parse_json(&body)?).await
}

/// Query-string form of a mining request.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct EventsQuery {
    pub q: Option<String>,
    pub min_support: Option<usize>,
    pub max_events: Option<usize>,
    pub time_level: Option<TimeLevel>,
    pub geo_level: Option<GeoLevel>,
    pub context_terms: Option<usize>,
}

impl EventsQuery {
    pub fn miner_params(&self) -> MinerParams {
        let d = MinerParams::default();
        MinerParams {
            min_support: self.min_support.unwrap_or(d.min_support),
            max_events: self.max_events.unwrap_or(d.max_events),
            time_level: self.time_level.unwrap_or(d.time_level),
            geo_level: self.geo_level.unwrap_or(d.geo_level),
            context_terms: self.context_terms.unwrap_or(d.context_terms),
            ..d
        }
    }

    pub fn mine_request(&self) -> MineRequest {
        MineRequest {
            q: self.q.clone().filter(|q| !q.trim().is_empty()),
            params: self.miner_params(),
            ..MineRequest::default()
        }
    }
}

async fn events(
    State(state): State<Arc<AppState>>,
    q: Result<Query<EventsQuery>, QueryRejection>,
) -> ApiResult<Vec<eventlens::miner::EventRecord>> {
    mine_records(&state, parse_query(q)?.mine_request()).await
}

async fn cube(state: &AppState, req: CubeRequest) -> ApiResult<eventlens::cube::CubeTable> {
    let max = state.config.max_cells;
    let (version, mut table) = run(state, move |s| s.cube(&req)).await?;
    let truncated = table.rows.len() > max;
    table.rows.truncate(max);
    Ok(envelope((version, table), truncated))
}

async fn cube_build(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<eventlens::cube::CubeTable> {
    let req: CubeRequest = parse_json(&body)?;
    if !req.pipeline.trim().is_empty() {
        return Err(ApiError::bad_request(
            "/cube/build takes no pipeline; use /cube/pipeline",
        ));
    }
    cube(&state, req).await
}

/// A JSON [`CubeRequest`], or a text pipeline with the mining request in the
/// query string.
async fn cube_pipeline(
    State(state): State<Arc<AppState>>,
    headers: HeaderMap,
    q: Result<Query<EventsQuery>, QueryRejection>,
    body: Bytes,
) -> ApiResult<eventlens::cube::CubeTable> {
    let is_text = headers
        .get(CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("text/"));
    let req = if is_text {
        let pipeline = std::str::from_utf8(&body).map_err(|_| ApiError::bad_request("pipeline text is not UTF-8"))?;
        CubeRequest {
            mine: parse_query(q)?.mine_request(),
            pipeline: pipeline.to_string(),
            ..CubeRequest::default()
        }
    } else {
        parse_json(&body)?
    };
    cube(&state, req).await
}

async fn diversify(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<eventlens::search::DiverseSelection> {
    let req: DiversifyRequest = parse_json(&body)?;
    Ok(envelope(run(&state, move |s| s.diversify(&req)).await?, false))
}

async fn summarize(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<eventlens::search::Summary> {
    let req: SummarizeRequest = parse_json(&body)?;
    Ok(envelope(run(&state, move |s| s.summarize(&req)).await?, false))
}

async fn eval_run(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<eventlens::evalkit::EvalReport> {
    let req: EvalRequest = parse_json(&body)?;
    Ok(envelope(run(&state, move |s| s.evaluate(&req)).await?, false))
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ReloadBody {
    path: Option<PathBuf>,
}

async fn reload(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Json<ReloadReport>, ApiError> {
    let body: ReloadBody = parse_json(&body)?;
    Ok(Json(state.reload(body.path).await?))
}

/// Loads a snapshot for serving, with a diagnostic naming the path.
pub fn load_snapshot(path: &Path) -> anyhow::Result<Snapshot> {
    use anyhow::Context;
    Snapshot::load(path).with_context(|| format!("cannot serve snapshot {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn query_text_from_parameters() {
        let q = SearchParamsQuery {
            q: Some("summer olympics".into()),
            time: Some("2008-01-01,2008-12-31".into()),
            geo: Some("39.9,116.4".into()),
            entity: Some("Usain_Bolt,Michael_Phelps".into()),
            n: None,
        };
        assert_eq!(
            q.query_text(),
            "summer olympics time:[2008-01-01,2008-12-31] geo:(39.9,116.4) entity:{Usain_Bolt,Michael_Phelps}"
        );
        let q = SearchParamsQuery {
            geo: Some("1,2,3,4".into()),
            ..Default::default()
        };
        assert_eq!(q.query_text(), "geo:[1,2,3,4]");
    }

    #[test]
    fn search_n_is_capped() {
        let q = SearchParamsQuery {
            q: Some("x".into()),
            n: Some(1000),
            ..Default::default()
        };
        let (req, truncated) = capped_search_request(&q, 100);
        assert_eq!((req.params.n, truncated), (100, true));
        let (req, truncated) = capped_search_request(&SearchParamsQuery::default(), 100);
        assert_eq!((req.params.n, truncated), (10, false));
    }

    #[test]
    fn empty_body_means_defaults() {
        let req: DiversifyRequest = parse_json(b"  ").unwrap();
        assert_eq!(req, DiversifyRequest::default());
        assert_eq!(parse_json::<MineRequest>(b"{").unwrap_err().code, "bad_request");
    }
}
