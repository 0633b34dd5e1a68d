//! JSON-over-HTTP service around a single editing session. Mutations are
//! serialized by the session lock; every response carries the revision it
//! reflects.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::Deserialize;
use serde_json::{json, Value};
use tensegrid_core::model::NodeRef;
use tensegrid_core::multiply::{place_fusion_node, PlacementFix, RemovedDensity, SharedEdge};
use tensegrid_core::Error;

use crate::render::{render_svg, RenderStyle};
use crate::session::{Op, Session};

pub type SharedSession = Arc<Mutex<Session>>;

#[derive(Debug)]
pub enum ApiError {
    BadRequest { kind: String, message: String },
    Conflict { expected: u64, current: u64 },
    Internal { kind: String, message: String },
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let (kind, message) = (e.kind().to_string(), e.to_string());
        if e.is_internal() {
            ApiError::Internal { kind, message }
        } else {
            ApiError::BadRequest { kind, message }
        }
    }
}

fn bad(kind: &str, message: impl Into<String>) -> ApiError {
    ApiError::BadRequest { kind: kind.into(), message: message.into() }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match self {
            ApiError::BadRequest { kind, message } => (StatusCode::BAD_REQUEST, json!({ "error": kind, "message": message })),
            ApiError::Conflict { expected, current } => (
                StatusCode::CONFLICT,
                json!({
                    "error": "RevisionConflict",
                    "message": format!("request is based on revision {expected}, current is {current}"),
                    "revision": current,
                }),
            ),
            ApiError::Internal { kind, message } => {
                (StatusCode::INTERNAL_SERVER_ERROR, json!({ "error": kind, "message": message }))
            }
        };
        (status, axum::Json(body)).into_response()
    }
}

type ApiResult = Result<Response, ApiError>;

fn with_revision(mut body: Value, revision: u64) -> Response {
    if let Value::Object(map) = &mut body {
        map.insert("revision".into(), json!(revision));
    }
    let mut response = axum::Json(body).into_response();
    response.headers_mut().insert("x-revision", HeaderValue::from(revision));
    response
}

/// JSON object body with an optional `revision` field split off.
fn parse_body(bytes: &Bytes) -> Result<(serde_json::Map<String, Value>, Option<u64>), ApiError> {
    let text = if bytes.is_empty() { "{}".as_bytes() } else { bytes.as_ref() };
    let value: Value = serde_json::from_slice(text).map_err(|e| bad("ParseError", e.to_string()))?;
    let Value::Object(mut map) = value else {
        return Err(bad("ParseError", "request body must be a JSON object"));
    };
    let revision = match map.remove("revision") {
        None | Some(Value::Null) => None,
        Some(v) => Some(v.as_u64().ok_or_else(|| bad("ParseError", "revision must be a non-negative integer"))?),
    };
    Ok((map, revision))
}

fn check_revision(session: &Session, expected: Option<u64>) -> Result<(), ApiError> {
    match expected {
        Some(r) if r != session.revision() => Err(ApiError::Conflict { expected: r, current: session.revision() }),
        _ => Ok(()),
    }
}

fn lock(state: &SharedSession) -> std::sync::MutexGuard<'_, Session> {
    state.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

fn op_from(mut map: serde_json::Map<String, Value>, tag: Option<&str>) -> Result<Op, ApiError> {
    if let Some(tag) = tag {
        map.insert("op".into(), json!(tag));
    }
    serde_json::from_value(Value::Object(map)).map_err(|e| bad("ParseError", e.to_string()))
}

fn mutate(state: &SharedSession, bytes: &Bytes, tag: &str) -> ApiResult {
    let (map, expected) = parse_body(bytes)?;
    let op = op_from(map, Some(tag))?;
    let mut session = lock(state);
    check_revision(&session, expected)?;
    let outcome = session.apply(&op)?;
    let body = serde_json::to_value(&outcome).expect("outcomes serialize");
    Ok(with_revision(body, session.revision()))
}

async fn get_structure(State(state): State<SharedSession>) -> ApiResult {
    let mut session = lock(&state);
    let doc = session.document()?;
    let mut response = axum::Json(doc).into_response();
    response.headers_mut().insert("x-revision", HeaderValue::from(session.revision()));
    Ok(response)
}

fn state_index(query: &HashMap<String, String>) -> Result<Option<usize>, ApiError> {
    match query.get("state") {
        None => Ok(None),
        Some(s) => s.parse().map(Some).map_err(|_| bad("ParseError", format!("state must be an index, got {s:?}"))),
    }
}

async fn get_selfstress(State(state): State<SharedSession>, Query(query): Query<HashMap<String, String>>) -> ApiResult {
    let k = state_index(&query)?;
    let mut session = lock(&state);
    let revision = session.revision();
    let basis = session.basis()?;
    let mut body = json!({
        "dim": basis.dim(),
        "members": basis.member_ids,
        "sources": basis.sources,
        "cell_states": basis.cell_count(),
        "virtual_states": basis.virtual_count(),
    });
    if let Some(k) = k {
        if k >= basis.dim() {
            return Err(bad("DimensionMismatch", format!("state {k} of {}", basis.dim())));
        }
        body["column"] = json!(basis.column(k));
    }
    Ok(with_revision(body, revision))
}

async fn get_svg(State(state): State<SharedSession>, Query(query): Query<HashMap<String, String>>) -> ApiResult {
    let k = state_index(&query)?;
    let mut session = lock(&state);
    let column = match k {
        Some(k) => {
            let basis = session.basis()?;
            if k >= basis.dim() {
                return Err(bad("DimensionMismatch", format!("state {k} of {}", basis.dim())));
            }
            Some(basis.column(k))
        }
        None => None,
    };
    let svg = render_svg(session.structure(), column.as_deref(), &RenderStyle::default());
    let mut response = svg.into_response();
    let headers = response.headers_mut();
    headers.insert(header::CONTENT_TYPE, HeaderValue::from_static("image/svg+xml"));
    headers.insert("x-revision", HeaderValue::from(session.revision()));
    Ok(response)
}

async fn post_cells(State(state): State<SharedSession>, body: Bytes) -> ApiResult {
    mutate(&state, &body, "adhere")
}

async fn post_fuse(State(state): State<SharedSession>, body: Bytes) -> ApiResult {
    mutate(&state, &body, "fuse")
}

async fn post_remove(State(state): State<SharedSession>, body: Bytes) -> ApiResult {
    mutate(&state, &body, "remove_member")
}

async fn post_restore(State(state): State<SharedSession>, body: Bytes) -> ApiResult {
    mutate(&state, &body, "restore_member")
}

async fn post_undo(State(state): State<SharedSession>, body: Bytes) -> ApiResult {
    let (_, expected) = parse_body(&body)?;
    let mut session = lock(&state);
    check_revision(&session, expected)?;
    if !session.undo() {
        return Err(bad("NothingToUndo", "no operation to undo"));
    }
    let counts = crate::session::Counts::of(session.structure());
    Ok(with_revision(json!({ "counts": counts }), session.revision()))
}

async fn post_whatif(State(state): State<SharedSession>, body: Bytes) -> ApiResult {
    let (map, expected) = parse_body(&body)?;
    let op = op_from(map, None)?;
    let session = lock(&state);
    check_revision(&session, expected)?;
    let outcome = session.what_if(&op)?;
    let body = serde_json::to_value(&outcome).expect("outcomes serialize");
    Ok(with_revision(body, session.revision()))
}

fn default_alpha() -> f64 {
    1.0
}

/// Placement inputs: the three shared corners, and either explicit removed
/// densities or the removed edges read from basis column `state`.
#[derive(Debug, Deserialize)]
struct PlaceRequest {
    shared: [NodeRef; 3],
    #[serde(default)]
    removed: Vec<RemovedDensity>,
    #[serde(default)]
    edges: Vec<SharedEdge>,
    #[serde(default)]
    state: usize,
    #[serde(default = "default_alpha")]
    alpha: f64,
    #[serde(default)]
    fix: Option<PlacementFix>,
}

async fn post_place_node(State(state): State<SharedSession>, body: Bytes) -> ApiResult {
    let (map, expected) = parse_body(&body)?;
    let req: PlaceRequest = serde_json::from_value(Value::Object(map)).map_err(|e| bad("ParseError", e.to_string()))?;
    let mut session = lock(&state);
    check_revision(&session, expected)?;
    let structure = session.structure().clone();
    let pts = req
        .shared
        .iter()
        .map(|r| match r {
            NodeRef::Node(id) => structure.point(*id),
            NodeRef::Point(p) => Ok(*p),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut removed = req.removed.clone();
    if !req.edges.is_empty() {
        let ids = req
            .shared
            .iter()
            .map(|r| match r {
                NodeRef::Node(id) => Ok(*id),
                NodeRef::Point(_) => Err(bad("ParseError", "edges need the shared corners as existing nodes")),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let basis = session.basis()?;
        if req.state >= basis.dim() {
            return Err(bad("DimensionMismatch", format!("state {} of {}", req.state, basis.dim())));
        }
        for edge in &req.edges {
            let (a, b) = match edge {
                SharedEdge::AB => (ids[0], ids[1]),
                SharedEdge::BC => (ids[1], ids[2]),
                SharedEdge::AC => (ids[0], ids[2]),
            };
            let m = structure.member_between(a, b).ok_or(Error::UnknownPair(a, b))?;
            removed.push(RemovedDensity { edge: *edge, t: basis.density(req.state, m) });
        }
    }
    let placement = place_fusion_node([pts[0], pts[1], pts[2]], &removed, req.alpha, req.fix)?;
    let body = json!({
        "point": placement.point,
        "line": placement.line,
        "cell_w1": placement.cell_w1,
        "removed": removed,
    });
    Ok(with_revision(body, session.revision()))
}

pub fn router(state: SharedSession) -> Router {
    Router::new()
        .route("/api/structure", get(get_structure))
        .route("/api/selfstress", get(get_selfstress))
        .route("/api/svg", get(get_svg))
        .route("/api/cells", post(post_cells))
        .route("/api/fuse", post(post_fuse))
        .route("/api/place-node", post(post_place_node))
        .route("/api/remove-member", post(post_remove))
        .route("/api/restore-member", post(post_restore))
        .route("/api/undo", post(post_undo))
        .route("/api/whatif", post(post_whatif))
        .with_state(state)
}

/// Serves `session` on `listener` until the task is dropped.
pub async fn serve(listener: tokio::net::TcpListener, session: Session) -> std::io::Result<()> {
    let state = Arc::new(Mutex::new(session));
    axum::serve(listener, router(state)).await
}
