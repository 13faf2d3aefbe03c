//! JSON-over-HTTP access to an urban multiplex network: zone lookups, metric
//! snapshots, what-if scenarios, Achilles-Heel queries and percolation runs.
//!
//! Scenario snapshots are never recomputed implicitly. Reads against a
//! scenario mutated since its last recompute answer `409 snapshot-stale`.

mod error;
mod routes;
mod state;

use std::future::Future;

use axum::http::HeaderValue;
use axum::routing::{delete, get, post};
use axum::Router;
use tokio::net::TcpListener;
use tower_http::cors::{Any, CorsLayer};

pub use error::ApiError;
pub use routes::{AchillesView, ScenarioView, ServicesView, ZoneMetricsView};
pub use state::{AppState, JobStatus, ServiceConfig, BASE_SCENARIO};

pub fn router(state: AppState) -> Router {
    let cors = match state
        .config()
        .cors_origin
        .as_deref()
        .map(HeaderValue::from_str)
    {
        Some(Ok(origin)) => CorsLayer::new().allow_origin(origin),
        _ => CorsLayer::new().allow_origin(Any),
    }
    .allow_methods(Any)
    .allow_headers(Any);

    Router::new()
        .route("/health", get(routes::health))
        .route("/area/{id}/services", get(routes::area_services))
        .route("/area/{id}/geometry", get(routes::area_geometry))
        .route("/area/{id}/metrics", get(routes::area_metrics))
        .route("/scenario", post(routes::create_scenario))
        .route("/scenario/{id}", get(routes::get_scenario))
        .route("/scenario/{id}/mutations", post(routes::add_mutations))
        .route(
            "/scenario/{id}/mutations/{index}",
            delete(routes::remove_mutation),
        )
        .route("/scenario/{id}/recompute", post(routes::recompute))
        .route("/scenario/{id}/snapshot", get(routes::scenario_snapshot))
        .route("/scenario/{id}/diff", get(routes::scenario_diff))
        .route("/scenario/{id}/export", get(routes::export_scenario))
        .route("/achilles", get(routes::achilles))
        .route("/percolation", post(routes::start_percolation))
        .route("/percolation/{job}", get(routes::percolation_job))
        .fallback(routes::not_found)
        .method_not_allowed_fallback(routes::method_not_allowed)
        .layer(cors)
        .with_state(state)
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    state: AppState,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
}
