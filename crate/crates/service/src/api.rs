//! REST routes. Errors are returned as `{"error": ..., "code": ...}`.

use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use limeade_core::{Document, Label};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::ServiceError;
use crate::session::{HistoryEntry, RecommendationPage};
use crate::store::FeedStore;

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match self {
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::Validation(_) => StatusCode::BAD_REQUEST,
            ServiceError::Conflict(_) => StatusCode::CONFLICT,
            ServiceError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        if status.is_server_error() {
            tracing::error!(error = %self, "request failed");
        }
        (status, Json(json!({ "error": self.to_string(), "code": self.code() }))).into_response()
    }
}

impl From<JsonRejection> for ServiceError {
    fn from(r: JsonRejection) -> Self {
        ServiceError::Validation(r.body_text())
    }
}

impl From<QueryRejection> for ServiceError {
    fn from(r: QueryRejection) -> Self {
        ServiceError::Validation(r.body_text())
    }
}

type ApiResult<T> = Result<Json<T>, ServiceError>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateFeed {
    pub seed_doc_ids: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Created {
    pub feed_id: String,
    pub version: u64,
}

#[derive(Debug, Deserialize)]
pub struct PageQuery {
    pub page: Option<usize>,
    pub page_size: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatePaper {
    pub doc_id: String,
    pub polarity: Label,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateTerm {
    pub term: String,
    pub polarity: Label,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Versioned {
    pub version: u64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TermRated {
    pub version: u64,
    pub retained_count: usize,
    pub discarded_count: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct History {
    pub feed_id: String,
    pub version: u64,
    pub entries: Vec<HistoryEntry>,
}

/// Retraining and ranking are CPU bound, so they leave the async workers.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ServiceError> + Send + 'static,
) -> Result<T, ServiceError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServiceError::Internal(e.to_string()))?
}

async fn create_feed(
    State(store): State<Arc<FeedStore>>,
    body: Result<Json<CreateFeed>, JsonRejection>,
) -> Result<(StatusCode, Json<Created>), ServiceError> {
    let Json(req) = body?;
    let created = blocking(move || {
        let id = store.create(&req.seed_doc_ids)?;
        Ok(Created { feed_id: id, version: 1 })
    })
    .await?;
    Ok((StatusCode::CREATED, Json(created)))
}

async fn get_feed(
    State(store): State<Arc<FeedStore>>,
    Path(id): Path<String>,
    query: Result<Query<PageQuery>, QueryRejection>,
) -> ApiResult<RecommendationPage> {
    let Query(q) = query?;
    blocking(move || store.page(&id, q.page.unwrap_or(1), q.page_size)).await.map(Json)
}

async fn rate_paper(
    State(store): State<Arc<FeedStore>>,
    Path(id): Path<String>,
    body: Result<Json<RatePaper>, JsonRejection>,
) -> ApiResult<Versioned> {
    let Json(req) = body?;
    blocking(move || store.rate_paper(&id, &req.doc_id, req.polarity))
        .await
        .map(|version| Json(Versioned { version }))
}

async fn rate_term(
    State(store): State<Arc<FeedStore>>,
    Path(id): Path<String>,
    body: Result<Json<RateTerm>, JsonRejection>,
) -> ApiResult<TermRated> {
    let Json(req) = body?;
    let u = blocking(move || store.rate_term(&id, &req.term, req.polarity)).await?;
    Ok(Json(TermRated {
        version: u.version,
        retained_count: u.retained_count,
        discarded_count: u.discarded_count,
    }))
}

async fn history(State(store): State<Arc<FeedStore>>, Path(id): Path<String>) -> ApiResult<History> {
    let (version, entries) = store.history(&id)?;
    Ok(Json(History { feed_id: id, version, entries }))
}

async fn corpus_doc(State(store): State<Arc<FeedStore>>, Path(id): Path<String>) -> ApiResult<Document> {
    store
        .corpus()
        .doc(&id)
        .cloned()
        .map(Json)
        .ok_or_else(|| ServiceError::NotFound(format!("unknown document {id}")))
}

async fn fallback() -> ServiceError {
    ServiceError::NotFound("no such route".into())
}

pub fn router(store: Arc<FeedStore>) -> Router {
    Router::new()
        .route("/api/feeds", post(create_feed))
        .route("/api/feeds/{id}", get(get_feed))
        .route("/api/feeds/{id}/ratings/paper", post(rate_paper))
        .route("/api/feeds/{id}/ratings/term", post(rate_term))
        .route("/api/feeds/{id}/history", get(history))
        .route("/api/corpus/docs/{id}", get(corpus_doc))
        .fallback(fallback)
        .with_state(store)
}
