//! Local preview service.
//!
//! All routes are served under `/api` and `/api/v1`. Times are integer
//! milliseconds. Reads share a lock; nudges and variant selection take the
//! write lock, so mutations are applied one at a time and every response
//! reflects one consistent state.

use crate::commands::{load_inputs, load_scene, run_compile, CliError, InputPaths};
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use choreo_core::compile::Compilation;
use choreo_core::config::Config;
use choreo_core::overrides::{apply_nudge, Nudge, NudgeError, Overrides, OVERRIDES_FILE};
use choreo_core::placement::{solve_placement, PlacementError, Scene};
use choreo_core::sim::{simulate, verify_trace, ChannelJitter, SimConfig};
use choreo_core::timeline::Timeline;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;
use tokio::sync::RwLock;

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub library: PathBuf,
    pub tour: PathBuf,
    pub config: Option<PathBuf>,
    pub scenes: Option<PathBuf>,
    /// Scene shown by `/api/scene` and solved by `/api/placement`.
    pub scene: Option<PathBuf>,
    /// Holds the overrides file.
    pub out_dir: PathBuf,
    /// Built UI bundle to serve at `/`.
    pub ui_dir: Option<PathBuf>,
}

pub struct AppState {
    compilation: Compilation,
    config: Config,
    overrides: Overrides,
    overrides_path: PathBuf,
    /// Compiled timelines with stored nudges applied, by variant label.
    current: BTreeMap<String, Timeline>,
    selected: String,
    scene: Option<Scene>,
    /// Stored nudges that no longer applied after recompiling.
    pub dropped_nudges: Vec<(String, Nudge, String)>,
}

pub type SharedState = Arc<RwLock<AppState>>;

impl AppState {
    /// Compiles the tour and layers the stored overrides on top.
    pub fn load(opts: &ServeOptions) -> Result<Self, CliError> {
        let inputs = load_inputs(&InputPaths {
            library: &opts.library,
            tour: &opts.tour,
            config: opts.config.as_deref(),
            scenes: opts.scenes.as_deref(),
        })?;
        std::fs::create_dir_all(&opts.out_dir)
            .map_err(|e| CliError::input(format!("{}: {e}", opts.out_dir.display())))?;
        let overrides_path = opts.out_dir.join(OVERRIDES_FILE);
        let mut overrides = Overrides::load(&overrides_path).map_err(|e| CliError::input(e.to_string()))?;
        let compilation = run_compile(&inputs, None, None)?;

        let mut current = BTreeMap::new();
        let mut dropped = Vec::new();
        for v in &compilation.variants {
            let mut t = v.timeline.clone();
            let mut kept = Vec::new();
            for n in overrides.nudges_for(&v.label) {
                match apply_nudge(&t, n) {
                    Ok(next) => {
                        t = next;
                        kept.push(n.clone());
                    }
                    Err(e) => dropped.push((v.label.clone(), n.clone(), e.to_string())),
                }
            }
            if !kept.is_empty() || overrides.nudges.contains_key(&v.label) {
                overrides.nudges.insert(v.label.clone(), kept);
            }
            current.insert(v.label.clone(), t);
        }
        let selected = match &overrides.selected_variant {
            Some(label) if current.contains_key(label) => label.clone(),
            _ => compilation.selected().label.clone(),
        };
        let scene = match &opts.scene {
            Some(p) => Some(load_scene(p)?),
            None => None,
        };
        Ok(Self {
            config: inputs.config,
            compilation,
            overrides,
            overrides_path,
            current,
            selected,
            scene,
            dropped_nudges: dropped,
        })
    }

    pub fn timeline(&self) -> &Timeline {
        &self.current[&self.selected]
    }
}

fn error(status: StatusCode, message: impl ToString) -> Response {
    (status, Json(json!({ "error": message.to_string() }))).into_response()
}

async fn get_timeline(State(state): State<SharedState>) -> Response {
    let s = state.read().await;
    Json(s.timeline()).into_response()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceQuery {
    pub seed: Option<u64>,
    /// Uniform jitter bound for all channels, ms.
    pub jitter: Option<u64>,
    pub epsilon: Option<u64>,
}

async fn get_trace(State(state): State<SharedState>, Query(q): Query<TraceQuery>) -> Response {
    let s = state.read().await;
    let mut cfg: SimConfig = s.config.sim;
    if let Some(seed) = q.seed {
        cfg.seed = seed;
    }
    if let Some(j) = q.jitter {
        cfg.jitter_ms = ChannelJitter::uniform(j);
    }
    if let Some(e) = q.epsilon {
        cfg.epsilon_ms = e;
    }
    let t = s.timeline();
    match simulate(t, &cfg) {
        Ok(trace) => match verify_trace(&trace, t, cfg.epsilon_ms) {
            Ok(report) => Json(json!({ "trace": trace, "report": report })).into_response(),
            Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e),
        },
        Err(e) => error(StatusCode::CONFLICT, e),
    }
}

async fn get_scene(State(state): State<SharedState>) -> Response {
    let s = state.read().await;
    match &s.scene {
        Some(scene) => Json(scene).into_response(),
        None => error(StatusCode::NOT_FOUND, "no scene loaded"),
    }
}

async fn get_placement(State(state): State<SharedState>) -> Response {
    let s = state.read().await;
    let Some(scene) = &s.scene else {
        return error(StatusCode::NOT_FOUND, "no scene loaded");
    };
    match solve_placement(scene, &s.config.placement) {
        Ok(r) => Json(r).into_response(),
        Err(PlacementError::NoFeasiblePlacement { samples, rejections }) => (
            StatusCode::UNPROCESSABLE_ENTITY,
            Json(json!({
                "error": "no feasible placement",
                "samples": samples,
                "rejections": rejections,
            })),
        )
            .into_response(),
        Err(e) => error(StatusCode::UNPROCESSABLE_ENTITY, e),
    }
}

async fn post_nudge(State(state): State<SharedState>, Json(nudge): Json<Nudge>) -> Response {
    let mut s = state.write().await;
    let next = match apply_nudge(s.timeline(), &nudge) {
        Ok(t) => t,
        Err(e @ (NudgeError::OutOfBounds(_) | NudgeError::BeforeOrigin(_))) => {
            return error(StatusCode::BAD_REQUEST, e)
        }
        Err(e @ NudgeError::UnknownEvent(_)) => return error(StatusCode::NOT_FOUND, e),
        Err(NudgeError::Rejected(report)) => {
            return (
                StatusCode::CONFLICT,
                Json(json!({ "error": "nudge rejected by the validator", "report": report })),
            )
                .into_response()
        }
    };
    let label = s.selected.clone();
    let mut overrides = s.overrides.clone();
    overrides.nudges.entry(label.clone()).or_default().push(nudge);
    if let Err(e) = overrides.save(&s.overrides_path) {
        return error(StatusCode::INTERNAL_SERVER_ERROR, e);
    }
    s.overrides = overrides;
    s.current.insert(label, next);
    Json(s.timeline()).into_response()
}

#[derive(Debug, Serialize)]
struct VariantInfo {
    label: String,
    total_ms: u64,
    segments: usize,
    nudges: usize,
}

async fn get_variants(State(state): State<SharedState>) -> Response {
    let s = state.read().await;
    let variants: Vec<VariantInfo> = s
        .compilation
        .variants
        .iter()
        .map(|v| VariantInfo {
            label: v.label.clone(),
            total_ms: s.current[&v.label].end_ms(),
            segments: v.timeline.speech.len(),
            nudges: s.overrides.nudges_for(&v.label).len(),
        })
        .collect();
    Json(json!({ "selected": s.selected, "variants": variants })).into_response()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SelectVariant {
    label: String,
}

async fn post_select_variant(State(state): State<SharedState>, Json(req): Json<SelectVariant>) -> Response {
    let mut s = state.write().await;
    if !s.current.contains_key(&req.label) {
        return error(StatusCode::NOT_FOUND, format!("no variant `{}`", req.label));
    }
    let mut overrides = s.overrides.clone();
    overrides.selected_variant = Some(req.label.clone());
    if let Err(e) = overrides.save(&s.overrides_path) {
        return error(StatusCode::INTERNAL_SERVER_ERROR, e);
    }
    s.overrides = overrides;
    s.selected = req.label;
    Json(s.timeline()).into_response()
}

fn api() -> Router<SharedState> {
    Router::new()
        .route("/timeline", get(get_timeline))
        .route("/trace", get(get_trace))
        .route("/scene", get(get_scene))
        .route("/placement", get(get_placement))
        .route("/nudge", post(post_nudge))
        .route("/variants", get(get_variants))
        .route("/select_variant", post(post_select_variant))
}

pub fn router(state: SharedState, ui_dir: Option<PathBuf>) -> Router {
    let app = Router::new().nest("/api", api()).nest("/api/v1", api());
    let app = match ui_dir {
        Some(dir) => app.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => app.route("/", get(|| async { "choreo preview service; API under /api\n" })),
    };
    app.with_state(state)
}

/// Serves until interrupted.
pub async fn serve(opts: ServeOptions, port: u16) -> Result<(), CliError> {
    let state = AppState::load(&opts)?;
    for (label, n, why) in &state.dropped_nudges {
        eprintln!("warning: stored nudge {} {:+} ms on {label} no longer applies: {why}", n.event_id, n.delta_ms);
    }
    let app = router(Arc::new(RwLock::new(state)), opts.ui_dir.clone());
    let listener = tokio::net::TcpListener::bind(("127.0.0.1", port))
        .await
        .map_err(|e| CliError::input(format!("bind 127.0.0.1:{port}: {e}")))?;
    let addr = listener.local_addr().map_err(|e| CliError::input(e.to_string()))?;
    eprintln!("serving on http://{addr}");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| CliError::failed(e.to_string()))
}

