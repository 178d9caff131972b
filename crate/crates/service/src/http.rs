//! Read-only HTTP endpoints over a loaded catalog.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use crate::catalog::{DatasetCatalog, DatasetEntry, DatasetSummary};
use crate::error::ServiceError;
use crate::lasso::{lasso_select, SelectionQuery};

type Shared = Arc<DatasetCatalog>;

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match &self {
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::BadRequest(_) | ServiceError::Config(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(serde_json::json!({ "error": self.to_string() }))).into_response()
    }
}

fn binary(bytes: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "application/octet-stream")], bytes).into_response()
}

#[derive(Debug, Deserialize)]
pub struct GlyphQuery {
    pub band: u32,
}

#[derive(Debug, Deserialize)]
pub struct MeshQuery {
    pub surface: String,
}

#[derive(Debug, Deserialize)]
pub struct ScatterQuery {
    pub x: String,
    pub y: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterRow {
    pub region: u32,
    pub band: u32,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterResponse {
    pub x: String,
    pub y: String,
    /// Whether each axis is constant over all regions.
    pub degenerate: [bool; 2],
    pub rows: Vec<ScatterRow>,
}

async fn list(State(catalog): State<Shared>) -> Json<Vec<DatasetSummary>> {
    Json(catalog.summaries())
}

async fn manifest(State(catalog): State<Shared>, Path(id): Path<String>) -> Result<Json<DatasetEntry>, ServiceError> {
    Ok(Json(catalog.get(&id)?.entry.clone()))
}

async fn glyphs(
    State(catalog): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<GlyphQuery>,
) -> Result<Response, ServiceError> {
    let ds = catalog.get(&id)?;
    let bytes = ds
        .glyphs
        .get(&q.band)
        .ok_or_else(|| ServiceError::NotFound(format!("band {} of `{id}`", q.band)))?;
    Ok(binary(bytes.clone()))
}

async fn mesh(
    State(catalog): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<MeshQuery>,
) -> Result<Response, ServiceError> {
    let ds = catalog.get(&id)?;
    let bytes = ds
        .meshes
        .get(&q.surface)
        .ok_or_else(|| ServiceError::NotFound(format!("surface `{}` of `{id}`", q.surface)))?;
    Ok(binary(bytes.clone()))
}

async fn scatter(
    State(catalog): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<ScatterQuery>,
) -> Result<Json<ScatterResponse>, ServiceError> {
    let ds = catalog.get(&id)?;
    let table = &ds.scatter;
    let column = |name: &str| {
        table
            .columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| ServiceError::BadRequest(format!("unknown scatter column `{name}`")))
    };
    let (cx, cy) = (column(&q.x)?, column(&q.y)?);
    let rows = table
        .region_ids
        .iter()
        .enumerate()
        .map(|(row, &region)| ScatterRow {
            region,
            band: ds.region_band[region as usize],
            x: table.values[cx][row],
            y: table.values[cy][row],
        })
        .collect();
    Ok(Json(ScatterResponse {
        x: q.x,
        y: q.y,
        degenerate: [table.degenerate[cx], table.degenerate[cy]],
        rows,
    }))
}

async fn select(
    State(catalog): State<Shared>,
    Path(id): Path<String>,
    Json(query): Json<SelectionQuery>,
) -> Result<Json<Vec<u32>>, ServiceError> {
    let ds = catalog.get(&id)?;
    Ok(Json(lasso_select(&query, &ds.scatter, &ds.region_band)?))
}

pub fn router(catalog: DatasetCatalog) -> Router {
    Router::new()
        .route("/datasets", get(list))
        .route("/datasets/{id}/manifest", get(manifest))
        .route("/datasets/{id}/glyphs", get(glyphs))
        .route("/datasets/{id}/mesh", get(mesh))
        .route("/datasets/{id}/scatter", get(scatter))
        .route("/datasets/{id}/select", post(select))
        .with_state(Arc::new(catalog))
}

pub async fn serve(catalog: DatasetCatalog, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(catalog)).await
}
