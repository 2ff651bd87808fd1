//! HTTP surface of a tank: axiom submission, queries, admin endpoints and
//! static assets.
//!
//! | route | body | success |
//! |---|---|---|
//! | `POST /api/axioms` | `{op, axiom}` | `{queued: true}` |
//! | `POST /api/query` | `{goal, limit}` | `{results: [{Var: TermJson}]}` |
//! | `POST /api/quiesce` | none | `{ticks}` |
//! | `GET /api/stats` | none | counters and dead letters |
//! | `GET /<path>` | none | file from the asset directory |
//!
//! Errors are JSON objects with an `error` code and a `message`; language
//! errors add `line` and `column`.

use std::future::Future;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::thread::JoinHandle;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, Method, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use fishtank_core::json::term_to_json;
use fishtank_core::lang::{parse_item, Item, LangError};
use fishtank_core::query_engine::QueryError;
use fishtank_core::static_engine::SolveError;
use fishtank_core::storage::StorageError;
use fishtank_core::tank::{Tank, TankError};
use fishtank_core::tweetlog::OpKind;
use percent_encoding::percent_decode_str;
use serde::Deserialize;
use serde_json::{json, Map, Value};
use tokio::net::TcpListener;
use tokio::sync::oneshot;

use crate::session::DEFAULT_LIMIT;

#[derive(Debug, Clone)]
pub struct AppState {
    pub tank: Arc<Tank>,
    pub assets: Option<PathBuf>,
    /// Most ticks one `/api/quiesce` call may run.
    pub tick_budget: u64,
}

impl AppState {
    pub fn new(tank: Arc<Tank>) -> AppState {
        let tick_budget = tank.config().max_quiesce_ticks;
        AppState {
            tank,
            assets: None,
            tick_budget,
        }
    }
}

#[derive(Debug, Deserialize)]
struct AxiomRequest {
    op: OpKind,
    axiom: String,
}

#[derive(Debug, Deserialize)]
struct QueryRequest {
    goal: String,
    limit: Option<usize>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl ToString) -> ApiError {
        ApiError {
            status,
            body: json!({ "error": code, "message": message.to_string() }),
        }
    }

    fn lang(e: &LangError) -> ApiError {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            body: json!({
                "error": e.kind.code(),
                "message": e.kind.to_string(),
                "line": e.line,
                "column": e.column,
            }),
        }
    }

    fn internal(message: impl ToString) -> ApiError {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<TankError> for ApiError {
    fn from(e: TankError) -> ApiError {
        match &e {
            TankError::Lang(l) => ApiError::lang(l),
            TankError::Storage(StorageError::QueueFull { .. }) => {
                ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "QueueFull", e)
            }
            TankError::NotQuiescent { ticks, pending } => ApiError {
                status: StatusCode::CONFLICT,
                body: json!({
                    "error": "NotQuiescent",
                    "message": e.to_string(),
                    "ticks": ticks,
                    "pending": pending,
                }),
            },
            TankError::Unsupported(_) => ApiError::new(StatusCode::BAD_REQUEST, "Unsupported", e),
            TankError::Storage(_) => ApiError::internal(e),
        }
    }
}

impl From<QueryError> for ApiError {
    fn from(e: QueryError) -> ApiError {
        match &e {
            QueryError::Lang(l) => ApiError::lang(l),
            QueryError::UnindexedQuery { .. } => {
                ApiError::new(StatusCode::BAD_REQUEST, "UnindexedQuery", e)
            }
            QueryError::BadLimit => ApiError::new(StatusCode::BAD_REQUEST, "BadLimit", e),
            QueryError::Solve(SolveError::BudgetExhausted { .. }) => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "BudgetExhausted", e)
            }
            QueryError::Solve(SolveError::BuiltinTypeError { .. }) => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "BuiltinTypeError", e)
            }
        }
    }
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "BadRequest", e))
}

/// Runs blocking tank work off the async executor.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(ApiError::internal)?
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/axioms", post(axioms))
        .route("/api/query", post(query))
        .route("/api/quiesce", post(quiesce))
        .route("/api/stats", get(stats))
        .fallback(asset)
        .with_state(state)
}

const NOT_AN_AXIOM: &str =
    "expected exactly one fact, rule or clause of a declared fact or dynamic name";

async fn axioms(State(s): State<AppState>, body: Bytes) -> Result<Json<Value>, ApiError> {
    let req: AxiomRequest = parse_body(&body)?;
    blocking(move || {
        let mut decls = s.tank.declarations();
        let mut items = parse_item(&req.axiom, &mut decls).map_err(|e| ApiError::lang(&e))?;
        let axiom = match (items.len(), items.pop()) {
            (1, Some(Item::Axiom(a))) => a,
            _ => {
                return Err(ApiError::new(
                    StatusCode::BAD_REQUEST,
                    "NotAnAxiom",
                    NOT_AN_AXIOM,
                ))
            }
        };
        match req.op {
            OpKind::Insert => s.tank.insert(&axiom)?,
            OpKind::Remove => s.tank.remove(&axiom)?,
        }
        Ok(Json(json!({ "queued": true })))
    })
    .await
}

async fn query(State(s): State<AppState>, body: Bytes) -> Result<Json<Value>, ApiError> {
    let req: QueryRequest = parse_body(&body)?;
    blocking(move || {
        let results = s
            .tank
            .query_text(&req.goal, req.limit.unwrap_or(DEFAULT_LIMIT))?;
        let rows: Vec<Value> = results
            .iter()
            .map(|r| {
                Value::Object(
                    r.bindings
                        .iter()
                        .map(|(k, v)| (k.clone(), term_to_json(v)))
                        .collect::<Map<_, _>>(),
                )
            })
            .collect();
        Ok(Json(json!({ "results": rows })))
    })
    .await
}

async fn quiesce(State(s): State<AppState>) -> Result<Json<Value>, ApiError> {
    blocking(move || {
        let ticks = s.tank.quiesce(s.tick_budget)?;
        Ok(Json(json!({ "ticks": ticks })))
    })
    .await
}

async fn stats(State(s): State<AppState>) -> Json<Value> {
    let st = s.tank.stats();
    let dead: Vec<Value> = s
        .tank
        .dead_letters()
        .iter()
        .map(|d| {
            json!({
                "axiom": d.entry.axiom.to_string(),
                "delta": d.entry.delta,
                "error": d.error,
            })
        })
        .collect();
    Json(json!({
        "queue_len": st.queue_len,
        "ticks": st.ticks,
        "io_count": st.io_count,
        "generic_io_count": st.generic_io_count,
        "partitions": st.partitions,
        "generic_entries": st.generic_entries,
        "static_clauses": st.static_clauses,
        "dead_letters": dead,
        "last_error": st.last_error,
    }))
}

/// Where a request path points inside `root`, or `None` if it tries to
/// leave it.
fn asset_path(root: &Path, path: &str) -> Option<PathBuf> {
    let decoded = percent_decode_str(path).decode_utf8().ok()?;
    let mut out = root.to_path_buf();
    for segment in decoded.split('/') {
        match segment {
            "" | "." => {}
            ".." => return None,
            s if s.contains(['\\', '\0', ':']) => return None,
            s => out.push(s),
        }
    }
    Some(out)
}

async fn asset(State(s): State<AppState>, method: Method, uri: Uri) -> Response {
    let path = uri.path();
    if path == "/api" || path.starts_with("/api/") {
        return ApiError::new(
            StatusCode::NOT_FOUND,
            "NotFound",
            format!("no route {path}"),
        )
        .into_response();
    }
    if method != Method::GET && method != Method::HEAD {
        return StatusCode::METHOD_NOT_ALLOWED.into_response();
    }
    let Some(root) = &s.assets else {
        return StatusCode::NOT_FOUND.into_response();
    };
    let Some(mut file) = asset_path(root, path) else {
        return StatusCode::FORBIDDEN.into_response();
    };
    if tokio::fs::metadata(&file).await.is_ok_and(|m| m.is_dir()) {
        file.push("index.html");
    }
    match tokio::fs::read(&file).await {
        Ok(bytes) => {
            let mime = mime_guess::from_path(&file).first_or_octet_stream();
            ([(header::CONTENT_TYPE, mime.to_string())], bytes).into_response()
        }
        Err(_) => StatusCode::NOT_FOUND.into_response(),
    }
}

/// Serves `state` on `listener` with a background tick worker until
/// `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    state: AppState,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let worker = state.tank.spawn_worker();
    let result = axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await;
    tokio::task::spawn_blocking(move || drop(worker))
        .await
        .map_err(std::io::Error::other)?;
    result
}

/// A server on its own thread and runtime, bound to a local port. Stops
/// when dropped.
#[derive(Debug)]
pub struct Background {
    addr: SocketAddr,
    stop: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<std::io::Result<()>>>,
}

impl Background {
    pub fn start(state: AppState) -> std::io::Result<Background> {
        let runtime = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_all()
            .build()?;
        let listener = runtime.block_on(TcpListener::bind(("127.0.0.1", 0)))?;
        let addr = listener.local_addr()?;
        let (stop, stopped) = oneshot::channel();
        let thread = std::thread::spawn(move || {
            runtime.block_on(serve(listener, state, async {
                let _ = stopped.await;
            }))
        });
        Ok(Background {
            addr,
            stop: Some(stop),
            thread: Some(thread),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// `http://127.0.0.1:<port>`
    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }
}

impl Drop for Background {
    fn drop(&mut self) {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn asset_paths_stay_inside_the_root() {
        let root = Path::new("/srv/assets");
        assert_eq!(
            asset_path(root, "/index.html"),
            Some(root.join("index.html"))
        );
        assert_eq!(asset_path(root, "/a/./b.js"), Some(root.join("a/b.js")));
        assert_eq!(asset_path(root, "/"), Some(root.to_path_buf()));
        for bad in [
            "/../journal",
            "/a/../../x",
            "/%2e%2e/x",
            "/a\\..\\x",
            "/%ff",
        ] {
            assert_eq!(asset_path(root, bad), None, "{bad}");
        }
    }
}
