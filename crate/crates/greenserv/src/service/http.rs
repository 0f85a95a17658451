//! JSON-over-HTTP wire API for `RouterService`.

use std::sync::Arc;

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::json;

use crate::service::core::{
    FeedbackReport, PoolOp, RouteRequest, RouterService, ServiceError,
};

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status =
            StatusCode::from_u16(self.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(json!({ "error": self.to_string() }))).into_response()
    }
}

async fn route_handler(
    State(svc): State<Arc<RouterService>>,
    Json(req): Json<RouteRequest>,
) -> Result<impl IntoResponse, ServiceError> {
    Ok(Json(svc.route(req)?))
}

async fn feedback_handler(
    State(svc): State<Arc<RouterService>>,
    Json(fb): Json<FeedbackReport>,
) -> Result<impl IntoResponse, ServiceError> {
    Ok(Json(svc.feedback(fb)?))
}

async fn pool_handler(
    State(svc): State<Arc<RouterService>>,
    Json(op): Json<PoolOp>,
) -> Result<impl IntoResponse, ServiceError> {
    svc.pool_churn(op)?;
    Ok(Json(json!({ "ok": true })))
}

async fn stats_handler(State(svc): State<Arc<RouterService>>) -> impl IntoResponse {
    Json(svc.stats())
}

async fn healthz_handler() -> impl IntoResponse {
    Json(json!({ "status": "ok" }))
}

/// The wire API: POST /route, POST /feedback, POST /pool, GET /stats,
/// GET /healthz.
pub fn app(service: Arc<RouterService>) -> Router {
    Router::new()
        .route("/route", post(route_handler))
        .route("/feedback", post(feedback_handler))
        .route("/pool", post(pool_handler))
        .route("/stats", get(stats_handler))
        .route("/healthz", get(healthz_handler))
        .with_state(service)
}

/// Binds and serves until the process exits.
pub async fn serve(service: Arc<RouterService>, addr: std::net::SocketAddr) -> crate::error::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app(service))
        .await
        .map_err(std::io::Error::from)?;
    Ok(())
}
