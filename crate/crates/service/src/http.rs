//! Resource-oriented HTTP API over [`Service`].
//!
//! Storyframe bodies are the canonical storyframe document. Other JSON
//! responses are envelopes carrying `project_id` and `revision`; every
//! response also carries the revision as its `ETag`. Mutations accept
//! `If-Match: "<revision>"`, which `PUT .../storyframe` requires.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::header::{CONTENT_TYPE, ETAG, IF_MATCH, LOCATION};
use axum::http::{HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;
use storyframe::blueprint::Blueprint;
use storyframe::document::{blueprint_document, frame_document, parse_frame, serialize_frame, Versioned};
use storyframe::model::{StoryMetrics, Stylization};
use storyframe::recommend::LayoutRanking;

use crate::{BuildRequest, CreateProject, Project, RefreshStylization, Service, ServiceError};

type Shared = Arc<Service>;

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::Stale { .. } | ServiceError::MissingStage(_) => StatusCode::CONFLICT,
            ServiceError::RevisionRequired => StatusCode::PRECONDITION_REQUIRED,
            ServiceError::Invalid(_) | ServiceError::Layout(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Malformed(_) => StatusCode::BAD_REQUEST,
            ServiceError::Provider(_) => StatusCode::BAD_GATEWAY,
            ServiceError::Render(_) | ServiceError::Recommend(_) | ServiceError::Storage(_) => {
                StatusCode::INTERNAL_SERVER_ERROR
            }
        }
    }

    /// `{"error": {"code", "message", ...}}` with the validation report or
    /// the current revision where relevant.
    pub fn body(&self) -> serde_json::Value {
        let mut err = json!({ "code": self.code(), "message": self.to_string() });
        match self {
            ServiceError::Invalid(report) => err["violations"] = json!(report.0),
            ServiceError::Stale { current, given } => {
                err["current_revision"] = json!(current);
                err["given_revision"] = json!(given);
            }
            _ => {}
        }
        json!({ "error": err })
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let mut res = (self.status(), axum::Json(self.body())).into_response();
        if let ServiceError::Stale { current, .. } = self {
            res.headers_mut().insert(ETAG, etag(current));
        }
        res
    }
}

fn etag(revision: u64) -> HeaderValue {
    HeaderValue::from_str(&format!("\"{revision}\"")).expect("digits are valid header text")
}

/// Parses `If-Match`: `"3"`, `W/"3"` or a bare `3`.
pub fn if_match(headers: &HeaderMap) -> Result<Option<u64>, ServiceError> {
    let Some(v) = headers.get(IF_MATCH) else { return Ok(None) };
    let text = v.to_str().map_err(|_| ServiceError::Malformed("If-Match is not text".into()))?;
    let t = text.trim();
    let t = t.strip_prefix("W/").unwrap_or(t).trim_matches('"');
    t.parse().map(Some).map_err(|_| ServiceError::Malformed(format!("If-Match `{text}` is not a revision number")))
}

fn parse_body<T: DeserializeOwned + Default>(body: &Bytes) -> Result<T, ServiceError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    parse_required(body)
}

fn parse_required<T: DeserializeOwned>(body: &Bytes) -> Result<T, ServiceError> {
    serde_json::from_slice(body).map_err(|e| ServiceError::Malformed(e.to_string()))
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ServiceError> + Send + 'static,
) -> Result<T, ServiceError> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ServiceError::Storage(format!("worker failed: {e}")))?
}

fn json_with_etag(status: StatusCode, revision: u64, body: &impl Serialize) -> Response {
    let mut res = (status, axum::Json(body)).into_response();
    res.headers_mut().insert(ETAG, etag(revision));
    res
}

fn frame_response(status: StatusCode, project: &Project) -> Response {
    let mut res = (status, serialize_frame(&project.frame)).into_response();
    let h = res.headers_mut();
    h.insert(CONTENT_TYPE, HeaderValue::from_static("application/json"));
    h.insert(ETAG, etag(project.revision));
    res
}

#[derive(Serialize)]
pub struct Created<'a> {
    pub project_id: &'a str,
    pub revision: u64,
    pub storyframe: Versioned<'a, storyframe::model::StoryFrame>,
}

#[derive(Serialize)]
pub struct StylizationReply<'a> {
    pub project_id: &'a str,
    pub revision: u64,
    pub stylization: &'a Stylization,
}

#[derive(Serialize)]
pub struct LayoutsReply<'a> {
    pub project_id: &'a str,
    pub revision: u64,
    pub metrics: &'a StoryMetrics,
    pub ranking: &'a LayoutRanking,
}

#[derive(Serialize)]
pub struct BlueprintReply<'a> {
    pub project_id: &'a str,
    pub revision: u64,
    pub blueprint: Versioned<'a, Blueprint>,
}

async fn create(State(svc): State<Shared>, body: Bytes) -> Result<Response, ServiceError> {
    let req: CreateProject = parse_required(&body)?;
    let project = blocking(move || svc.create_project(req)).await?;
    let body = Created {
        project_id: &project.id,
        revision: project.revision,
        storyframe: frame_document(&project.frame),
    };
    let mut res = json_with_etag(StatusCode::CREATED, project.revision, &body);
    let location = HeaderValue::from_str(&format!("/projects/{}", project.id))
        .map_err(|e| ServiceError::Malformed(e.to_string()))?;
    res.headers_mut().insert(LOCATION, location);
    Ok(res)
}

async fn get_frame(State(svc): State<Shared>, Path(id): Path<String>) -> Result<Response, ServiceError> {
    let project = svc.get_project(&id)?;
    Ok(frame_response(StatusCode::OK, &project))
}

async fn put_frame(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Response, ServiceError> {
    let expected = if_match(&headers)?;
    svc.get_project(&id)?;
    let expected = expected.ok_or(ServiceError::RevisionRequired)?;
    let text = std::str::from_utf8(&body).map_err(|e| ServiceError::Malformed(e.to_string()))?;
    let frame = parse_frame(text).map_err(|e| ServiceError::Malformed(e.to_string()))?;
    let project = blocking(move || svc.put_storyframe(&id, expected, frame)).await?;
    Ok(frame_response(StatusCode::OK, &project))
}

async fn refresh(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Response, ServiceError> {
    let expected = if_match(&headers)?;
    let req: RefreshStylization = parse_body(&body)?;
    let (project, stylization) = blocking(move || svc.refresh_stylization(&id, req, expected)).await?;
    let body = StylizationReply { project_id: &project.id, revision: project.revision, stylization: &stylization };
    Ok(json_with_etag(StatusCode::OK, project.revision, &body))
}

async fn layouts(State(svc): State<Shared>, Path(id): Path<String>) -> Result<Response, ServiceError> {
    let (project, metrics, ranking) = svc.rank_layouts(&id)?;
    let body = LayoutsReply { project_id: &project.id, revision: project.revision, metrics: &metrics, ranking: &ranking };
    Ok(json_with_etag(StatusCode::OK, project.revision, &body))
}

async fn build(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Response, ServiceError> {
    let expected = if_match(&headers)?;
    let req: BuildRequest = parse_required(&body)?;
    let project = blocking(move || svc.build(&id, req, expected)).await?;
    let blueprint = project.blueprint.as_ref().ok_or(ServiceError::MissingStage("blueprint"))?;
    let body = BlueprintReply {
        project_id: &project.id,
        revision: project.revision,
        blueprint: blueprint_document(blueprint),
    };
    Ok(json_with_etag(StatusCode::OK, project.revision, &body))
}

async fn render_svg(State(svc): State<Shared>, Path(id): Path<String>) -> Result<Response, ServiceError> {
    let (project, rendered) = blocking(move || svc.render_svg(&id)).await?;
    let mut res = rendered.svg.into_response();
    let h = res.headers_mut();
    h.insert(CONTENT_TYPE, HeaderValue::from_static("image/svg+xml"));
    h.insert(ETAG, etag(project.revision));
    h.insert("x-render-warnings", HeaderValue::from(rendered.warnings.len()));
    Ok(res)
}

pub fn router(service: Shared) -> Router {
    Router::new()
        .route("/projects", post(create))
        .route("/projects/{id}/storyframe", get(get_frame).put(put_frame))
        .route("/projects/{id}/stylization:refresh", post(refresh))
        .route("/projects/{id}/layouts", get(layouts))
        .route("/projects/{id}/blueprint", post(build))
        .route("/projects/{id}/render.svg", get(render_svg))
        .with_state(service)
}

/// Serves the API on an already bound listener until the task is dropped.
pub async fn serve(listener: tokio::net::TcpListener, service: Shared) -> std::io::Result<()> {
    axum::serve(listener, router(service)).await
}
