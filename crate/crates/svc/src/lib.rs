//! Stateless HTTP JSON service: synthesis and program application over a
//! table sent with every request.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::time::Instant;

use axum::extract::rejection::JsonRejection;
use axum::extract::DefaultBodyLimit;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tokio::net::TcpListener;
use tower_http::cors::CorsLayer;
use tower_http::trace::TraceLayer;

use dacex_core::grid::Grid;
use dacex_core::lang::{parse_program_capped, DEFAULT_DEPTH_CAP};
use dacex_core::sketch::{
    all_filled, complete_table, parse_hole_id, parse_sketch, synthesize_each, CompletionError, CompletionSpec,
    Fill, HoleBindings, HoleOutcome, SpecError, Targets,
};
use dacex_core::synth::{SynthConfig, SynthError};

/// Largest accepted request body.
pub const BODY_LIMIT: usize = 1 << 20;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesizeRequest {
    /// Table rows; numbers, booleans and null are converted to text.
    pub table: Vec<Vec<Value>>,
    pub sketch: String,
    /// Per-hole examples in spec-file shape.
    pub examples: Value,
    #[serde(default)]
    pub targets: Option<Value>,
    /// Overrides merged over the default synthesis config.
    #[serde(default)]
    pub config: Option<Value>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApplyRequest {
    pub table: Vec<Vec<Value>>,
    pub sketch: String,
    /// Program text per hole id.
    pub programs: BTreeMap<String, String>,
    #[serde(default)]
    pub targets: Option<Value>,
    /// Largest GetCell nesting a program may have.
    #[serde(default)]
    pub depth_cap: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HoleStatus {
    Solved,
    NoProgram,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HoleReport {
    pub status: HoleStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub program: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub branches: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthesizeResponse {
    pub holes: BTreeMap<String, HoleReport>,
    /// Empty unless every hole is solved.
    pub fills: Vec<Fill>,
    /// Every hole solved and every target filled.
    pub complete: bool,
    pub timing_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApplyResponse {
    pub fills: Vec<Fill>,
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorBody {
    pub error: String,
    pub detail: String,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, error: impl Into<String>, detail: impl Into<String>) -> ApiError {
        ApiError { status, body: ErrorBody { error: error.into(), detail: detail.into() } }
    }

    fn invalid(error: impl Into<String>, detail: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, error, detail)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> ApiError {
        let status = match r.status() {
            s @ (StatusCode::PAYLOAD_TOO_LARGE | StatusCode::UNSUPPORTED_MEDIA_TYPE) => s,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError::new(status, "BadRequest", r.body_text())
    }
}

/// Name of an enum variant, taken from its Debug form.
fn variant<T: Debug>(x: &T) -> String {
    let s = format!("{x:?}");
    s.split(|c: char| !c.is_alphanumeric() && c != '_').next().unwrap_or_default().to_string()
}

fn spec_error(e: &SpecError) -> ApiError {
    match e {
        SpecError::Sketch(inner) => ApiError::invalid(variant(inner), e.to_string()),
        _ => ApiError::invalid(variant(e), e.to_string()),
    }
}

fn synth_error(hole: u32, e: &SynthError) -> ApiError {
    ApiError::invalid(variant(e), format!("hole ?{hole}: {e}"))
}

fn grid_of(table: &[Vec<Value>]) -> Result<Grid, ApiError> {
    let mut rows = Vec::with_capacity(table.len());
    for row in table {
        let mut out = Vec::with_capacity(row.len());
        for v in row {
            out.push(match v {
                Value::String(s) => s.trim().to_string(),
                Value::Null => String::new(),
                Value::Number(_) | Value::Bool(_) => v.to_string(),
                _ => return Err(ApiError::invalid("BadTable", format!("table cells must be scalars, got {v}"))),
            });
        }
        rows.push(out);
    }
    Grid::from_rows(&rows).map_err(|e| ApiError::invalid("BadTable", e.to_string()))
}

fn targets_of(v: Option<Value>) -> Result<Targets, ApiError> {
    v.map_or(Ok(Targets::Missing), |v| Targets::from_value(v).map_err(|e| spec_error(&e)))
}

/// Runs synthesis for one request; the status is 200 or 408.
pub fn run_synthesize(req: SynthesizeRequest) -> Result<(StatusCode, SynthesizeResponse), ApiError> {
    let grid = grid_of(&req.table)?;
    let mut spec = serde_json::json!({ "sketch": req.sketch, "examples": req.examples });
    if let Some(t) = req.targets {
        spec["targets"] = t;
    }
    let spec = CompletionSpec::from_value(spec).map_err(|e| spec_error(&e))?;
    let base = SynthConfig::default();
    let cfg = match &req.config {
        Some(over) => base.with_overrides(over).map_err(|e| ApiError::invalid(variant(&e), e.to_string()))?,
        None => base,
    };
    let start = Instant::now();
    let outcomes = synthesize_each(&grid, &spec, &cfg).map_err(|e| match e {
        CompletionError::Spec(e) => spec_error(&e),
        CompletionError::Synth { hole, source } => synth_error(hole, &source),
    })?;
    let mut holes = BTreeMap::new();
    let mut bindings = HoleBindings::new();
    let mut timed_out = false;
    for (h, outcome) in outcomes {
        let report = match outcome {
            HoleOutcome::Solved(p) => {
                let r = HoleReport {
                    status: HoleStatus::Solved,
                    program: Some(p.to_string()),
                    theta: Some(cfg.score.program(&p)),
                    branches: Some(p.branches().len()),
                };
                bindings.insert(h, p);
                r
            }
            HoleOutcome::NoProgram => HoleReport { status: HoleStatus::NoProgram, program: None, theta: None, branches: None },
            HoleOutcome::Failed(SynthError::Timeout(_)) => {
                timed_out = true;
                HoleReport { status: HoleStatus::Timeout, program: None, theta: None, branches: None }
            }
            HoleOutcome::Failed(e) => return Err(synth_error(h, &e)),
        };
        holes.insert(h.to_string(), report);
    }
    let solved = bindings.len() == holes.len();
    let fills = if solved { complete_table(&grid, &spec.sketch, &spec.targets, &bindings).1 } else { Vec::new() };
    let complete = solved && all_filled(&fills);
    let timing_ms = start.elapsed().as_millis() as u64;
    tracing::info!(holes = holes.len(), solved, timed_out, timing_ms, "synthesize");
    let status = if timed_out { StatusCode::REQUEST_TIMEOUT } else { StatusCode::OK };
    Ok((status, SynthesizeResponse { holes, fills, complete, timing_ms }))
}

/// Evaluates given programs without synthesis.
pub fn run_apply(req: ApplyRequest) -> Result<ApplyResponse, ApiError> {
    let grid = grid_of(&req.table)?;
    let sketch = parse_sketch(&req.sketch).map_err(|e| ApiError::invalid(variant(&e), e.to_string()))?;
    let targets = targets_of(req.targets)?;
    let cap = req.depth_cap.unwrap_or(DEFAULT_DEPTH_CAP);
    let mut bindings = HoleBindings::new();
    for (key, text) in &req.programs {
        let h = parse_hole_id(key).ok_or_else(|| ApiError::invalid("BadHole", format!("bad hole id {key:?}")))?;
        let p = parse_program_capped(text, cap)
            .map_err(|e| ApiError::invalid(variant(&e), format!("hole ?{h}: {e}")))?;
        bindings.insert(h, p);
    }
    if let Some(h) = sketch.holes().into_iter().find(|h| !bindings.contains_key(h)) {
        return Err(ApiError::invalid("UnboundHole", format!("no program for hole ?{h}")));
    }
    let fills = complete_table(&grid, &sketch, &targets, &bindings).1;
    let complete = all_filled(&fills);
    Ok(ApplyResponse { fills, complete })
}

async fn health() -> Json<Value> {
    Json(serde_json::json!({
        "status": "ok",
        "name": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
    }))
}

async fn synthesize(body: Result<Json<SynthesizeRequest>, JsonRejection>) -> Result<Response, ApiError> {
    let Json(req) = body?;
    let (status, resp) = tokio::task::spawn_blocking(move || run_synthesize(req))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string()))??;
    Ok((status, Json(resp)).into_response())
}

async fn apply(body: Result<Json<ApplyRequest>, JsonRejection>) -> Result<Json<ApplyResponse>, ApiError> {
    let Json(req) = body?;
    Ok(Json(run_apply(req)?))
}

pub fn router() -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/api/synthesize", post(synthesize))
        .route("/api/apply", post(apply))
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .layer(CorsLayer::permissive())
        .layer(TraceLayer::new_for_http())
}

/// Serves the router on a bound listener until the process ends.
pub async fn serve(listener: TcpListener) -> std::io::Result<()> {
    tracing::info!(addr = ?listener.local_addr().ok(), "listening");
    axum::serve(listener, router()).await
}
