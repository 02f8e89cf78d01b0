//! HTTP facade over the level-set engine for interactive use.
//!
//! | method | path | body | reply |
//! |---|---|---|---|
//! | POST | `/sessions` | PNG/PGM image bytes | `{id, width, height, iter}` |
//! | POST | `/sessions/{id}/seeds` | seed JSON | `{iter}` (state reset) |
//! | POST | `/sessions/{id}/run` | `{model, params?, n_steps}` | `{iter, converged, degenerate}` |
//! | GET | `/sessions/{id}/state` | | iteration, contours, base64 PNG mask, region means |
//! | GET | `/sessions/{id}/mask` | | PNG mask |
//! | POST | `/sessions/{id}/metrics` | PNG/PGM truth mask | metrics report |
//!
//! Unknown sessions answer 404, out-of-order calls 409, and an unstable
//! evolution 422 with the failing iteration and pixel; the session then
//! stays at its last good state. Anything else under `/` is served from
//! the static directory, if one is configured.

mod error;
mod session;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::{header, StatusCode};
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::Engine as _;
use levelset_core::io::{decode_image, decode_mask, encode_mask_png, parse_seed_str};
use levelset_core::{evaluate, extract_contours, region_means, Evolution, ModelKind, ParamOverrides};
use serde::Deserialize;
use serde_json::{json, Value};
use tower_http::services::ServeDir;

pub use error::ApiError;
pub use session::{Session, SessionStore};

const MAX_BODY: usize = 64 << 20;

#[derive(Debug, Clone)]
pub struct Config {
    pub idle_ttl: Duration,
    pub static_dir: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            idle_ttl: Duration::from_secs(30 * 60),
            static_dir: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AppState {
    pub store: Arc<SessionStore>,
}

pub fn router(config: &Config) -> (Router, AppState) {
    let state = AppState {
        store: Arc::new(SessionStore::default()),
    };
    let api = Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/seeds", post(set_seeds))
        .route("/sessions/{id}/run", post(run_steps))
        .route("/sessions/{id}/state", get(get_state))
        .route("/sessions/{id}/mask", get(get_mask))
        .route("/sessions/{id}/metrics", post(get_metrics))
        .layer(DefaultBodyLimit::max(MAX_BODY))
        .with_state(state.clone());
    let app = match &config.static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    };
    (app, state)
}

/// Serves until the process is stopped, purging idle sessions once a minute.
pub async fn serve(addr: SocketAddr, config: Config) -> std::io::Result<()> {
    let (app, state) = router(&config);
    let ttl = config.idle_ttl;
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(Duration::from_secs(60).min(ttl));
        loop {
            tick.tick().await;
            state.store.purge_idle(ttl);
        }
    });
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, app).await
}

type ApiResult<T> = Result<T, ApiError>;

fn session(state: &AppState, id: &str) -> ApiResult<session::SessionHandle> {
    state.store.get(id).ok_or_else(|| ApiError::not_found(id))
}

async fn create_session(State(state): State<AppState>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let image = decode_image(&body).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let (width, height) = image.dims();
    let id = state.store.insert(Session::new(image));
    Ok((
        StatusCode::CREATED,
        Json(json!({ "id": id.to_string(), "width": width, "height": height, "iter": 0 })),
    ))
}

async fn set_seeds(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: String,
) -> ApiResult<Json<Value>> {
    let handle = session(&state, &id)?;
    let mut s = handle.lock().await;
    s.last_used = std::time::Instant::now();
    let seeds = parse_seed_str(&body).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let (w, h) = s.image.dims();
    levelset_core::rasterize_seeds(&seeds, w, h).map_err(|e| ApiError::bad_request(e.to_string()))?;
    s.seeds = Some(seeds);
    s.evolution = None;
    Ok(Json(json!({ "iter": 0 })))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunRequest {
    model: ModelKind,
    #[serde(default)]
    params: ParamOverrides,
    n_steps: usize,
}

async fn run_steps(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<RunRequest>,
) -> ApiResult<Json<Value>> {
    let handle = session(&state, &id)?;
    let mut s = handle.lock_owned().await;
    s.last_used = std::time::Instant::now();
    let Some(seeds) = s.seeds.clone() else {
        return Err(ApiError::conflict("set seeds before running"));
    };
    let params = req.params.apply(req.model);
    match s.params() {
        Some(current) if *current != params => {
            return Err(ApiError::conflict(
                "parameters differ from the running evolution; post seeds again to restart",
            )
            .with(json!({ "iter": s.iter() })));
        }
        Some(_) => {}
        None => {
            let evo = Evolution::new(s.image.clone(), &seeds, params)
                .map_err(|e| ApiError::engine(e, 0))?;
            s.evolution = Some(evo);
        }
    }
    let n = req.n_steps;
    tokio::task::spawn_blocking(move || {
        let evo = s.evolution.as_mut().expect("evolution set above");
        let outcome = evo.advance(n);
        let iter = evo.state().iter;
        outcome.map_err(|e| ApiError::engine(e, iter))?;
        let st = evo.state();
        Ok(Json(json!({
            "iter": st.iter,
            "converged": st.converged,
            "degenerate": st.degenerate,
        })))
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
}

async fn get_state(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let handle = session(&state, &id)?;
    let mut s = handle.lock().await;
    s.last_used = std::time::Instant::now();
    let (phi, mask) = s.snapshot().ok_or_else(|| ApiError::conflict("no seeds set"))?;
    let means = region_means(&s.image, &phi).ok().flatten();
    let (converged, degenerate) = s
        .evolution
        .as_ref()
        .map_or((false, false), |e| (e.state().converged, e.state().degenerate));
    Ok(Json(json!({
        "iter": s.iter(),
        "converged": converged,
        "degenerate": degenerate,
        "model": s.params().map(|p| p.model),
        "contours": extract_contours(&phi),
        "mask_png": base64::engine::general_purpose::STANDARD.encode(encode_mask_png(&mask)),
        "c_plus": means.map(|m| m.c_plus),
        "c_minus": means.map(|m| m.c_minus),
    })))
}

async fn get_mask(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let handle = session(&state, &id)?;
    let s = handle.lock().await;
    let (_, mask) = s.snapshot().ok_or_else(|| ApiError::conflict("no seeds set"))?;
    Ok((
        [
            (header::CONTENT_TYPE, "image/png".to_string()),
            (header::HeaderName::from_static("x-iteration"), s.iter().to_string()),
        ],
        encode_mask_png(&mask),
    ))
}

async fn get_metrics(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<Value>> {
    let handle = session(&state, &id)?;
    let mut s = handle.lock().await;
    s.last_used = std::time::Instant::now();
    let truth = decode_mask(&body).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let (_, mask) = s.snapshot().ok_or_else(|| ApiError::conflict("no seeds set"))?;
    let mut report = evaluate(&mask, &truth).map_err(|e| ApiError::bad_request(e.to_string()))?;
    if let Some(evo) = &s.evolution {
        report.iterations = Some(evo.state().iter);
        report.wall_time = Some(evo.wall_time());
    }
    let mut body = serde_json::to_value(report).expect("report serializes");
    body["iter"] = json!(s.iter());
    Ok(Json(body))
}
