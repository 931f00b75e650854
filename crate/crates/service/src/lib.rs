//! HTTP front end for csdplan.
//!
//! All routes live under `/api/v1` and speak JSON. Handlers parse the body,
//! take a snapshot of the loaded calibration and hand both to
//! [`csdplan_core::plan`]; no model arithmetic happens here.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use csdplan_core::plan::{self, CurvesRequest, DiffRequest, IsoRequest, SolveRequest, SweepRequest, TcoRequest};
use csdplan_core::whatif::grid_cells;
use csdplan_core::{CalibrationSet, Error};
use serde::de::DeserializeOwned;
use serde::Serialize;
use tower_http::services::ServeDir;

/// Largest sweep a single request may ask for.
pub const MAX_GRID_CELLS: usize = 250_000;

pub const DEFAULT_ADDR: &str = "127.0.0.1:8080";

/// Shared service state. The calibration is swapped whole on reload, so a
/// request keeps the snapshot it started with.
pub struct AppState {
    calibration: RwLock<Arc<CalibrationSet>>,
    source: Option<PathBuf>,
}

impl AppState {
    pub fn new(calibration: CalibrationSet, source: Option<PathBuf>) -> Self {
        Self {
            calibration: RwLock::new(Arc::new(calibration)),
            source,
        }
    }

    pub fn snapshot(&self) -> Arc<CalibrationSet> {
        Arc::clone(&self.calibration.read().unwrap_or_else(|e| e.into_inner()))
    }

    /// Re-read the source file; the old set stays active if that fails.
    pub fn reload(&self) -> Result<Arc<CalibrationSet>, Error> {
        let Some(path) = &self.source else {
            return Err(Error::Domain("no calibration file configured for reload".into()));
        };
        let fresh = Arc::new(CalibrationSet::from_path(path)?);
        *self.calibration.write().unwrap_or_else(|e| e.into_inner()) = Arc::clone(&fresh);
        log::info!("reloaded calibration from {}", path.display());
        Ok(fresh)
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    kind: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            kind,
            message: message.into(),
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let (status, kind) = match &e {
            Error::Domain(_) => (StatusCode::UNPROCESSABLE_ENTITY, "domain"),
            Error::Validation(_) => (StatusCode::UNPROCESSABLE_ENTITY, "validation"),
            Error::Lookup(_) => (StatusCode::NOT_FOUND, "lookup"),
            Error::Parse { .. } => (StatusCode::BAD_REQUEST, "parse"),
            Error::Inconsistent(_) => (StatusCode::INTERNAL_SERVER_ERROR, "inconsistent"),
            Error::Io(_) => (StatusCode::INTERNAL_SERVER_ERROR, "io"),
        };
        ApiError::new(status, kind, e.to_string())
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: ErrorDetail<'a>,
}

#[derive(Serialize)]
struct ErrorDetail<'a> {
    kind: &'a str,
    message: &'a str,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: ErrorDetail {
                kind: self.kind,
                message: &self.message,
            },
        };
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// Parse a request body ourselves so malformed input is a 400 with the
/// field-level message from serde.
fn body<T: DeserializeOwned>(bytes: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(bytes).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_body", e.to_string()))
}

fn check_grid(req: &SweepRequest) -> Result<(), ApiError> {
    let cells = grid_cells(&req.axis_x, &req.axis_y);
    if cells > MAX_GRID_CELLS {
        return Err(ApiError::new(
            StatusCode::PAYLOAD_TOO_LARGE,
            "grid_too_large",
            format!("sweep of {cells} cells exceeds the limit of {MAX_GRID_CELLS}"),
        ));
    }
    Ok(())
}

/// Run CPU-heavy work off the async executor.
async fn blocking<T, F>(f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce() -> Result<T, Error> + Send + 'static,
{
    match tokio::task::spawn_blocking(f).await {
        Ok(r) => Ok(Json(r?)),
        Err(e) => Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())),
    }
}

async fn calibration(State(st): State<Arc<AppState>>) -> Json<plan::CalibrationSummary> {
    Json(plan::summarize(&st.snapshot()))
}

async fn reload(State(st): State<Arc<AppState>>) -> ApiResult<plan::CalibrationSummary> {
    let cal = st.reload()?;
    Ok(Json(plan::summarize(&cal)))
}

async fn solve(State(st): State<Arc<AppState>>, bytes: Bytes) -> ApiResult<csdplan_core::BepResult> {
    let req: SolveRequest = body(&bytes)?;
    Ok(Json(plan::solve(&st.snapshot(), &req)?))
}

async fn curves(State(st): State<Arc<AppState>>, bytes: Bytes) -> ApiResult<csdplan_core::CurveSet> {
    let req: CurvesRequest = body(&bytes)?;
    let cal = st.snapshot();
    blocking(move || plan::curves(&cal, &req)).await
}

async fn sweep(State(st): State<Arc<AppState>>, bytes: Bytes) -> ApiResult<csdplan_core::BepSurface> {
    let req: SweepRequest = body(&bytes)?;
    check_grid(&req)?;
    let cal = st.snapshot();
    blocking(move || plan::sweep(&cal, &req)).await
}

async fn iso(State(st): State<Arc<AppState>>, bytes: Bytes) -> ApiResult<plan::IsoResponse> {
    let req: IsoRequest = body(&bytes)?;
    check_grid(&req.sweep)?;
    let cal = st.snapshot();
    blocking(move || plan::iso(&cal, &req)).await
}

async fn diff(State(st): State<Arc<AppState>>, bytes: Bytes) -> ApiResult<plan::DiffResponse> {
    let req: DiffRequest = body(&bytes)?;
    Ok(Json(plan::diff(&st.snapshot(), &req)?))
}

async fn tco(State(st): State<Arc<AppState>>, bytes: Bytes) -> ApiResult<csdplan_core::TcoReport> {
    let req: TcoRequest = body(&bytes)?;
    Ok(Json(plan::tco(Some(&st.snapshot()), &req)?))
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "lookup", "no such route")
}

const PLACEHOLDER: &str = "<!doctype html>
<html><head><meta charset=\"utf-8\"><title>csdplan</title></head>
<body><h1>csdplan</h1>
<p>No UI bundle is being served. The JSON API is available under <code>/api/v1</code>:</p>
<ul>
<li>GET /api/v1/calibration</li>
<li>POST /api/v1/solve, /curves, /sweep, /iso, /diff, /tco</li>
<li>POST /api/v1/reload</li>
</ul></body></html>
";

/// Build the router. With `static_dir`, everything outside `/api` is served
/// from that directory.
pub fn router(state: Arc<AppState>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/calibration", get(calibration))
        .route("/reload", post(reload))
        .route("/solve", post(solve))
        .route("/curves", post(curves))
        .route("/sweep", post(sweep))
        .route("/iso", post(iso))
        .route("/diff", post(diff))
        .route("/tco", post(tco))
        .fallback(not_found)
        .with_state(state);
    let app = Router::new().nest("/api/v1", api);
    match static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app.route("/", get(|| async { Html(PLACEHOLDER) })),
    }
}

/// Serve until Ctrl-C.
pub async fn serve(addr: SocketAddr, state: Arc<AppState>, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state, static_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
