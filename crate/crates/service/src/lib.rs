//! JSON API for the live search task: sessions, arm-aware search, click and
//! survey logging, and plain-text metrics.

pub mod config;
pub mod error;
pub mod handlers;
pub mod roster;
mod state;

use axum::routing::{get, post};
use axum::Router;
use tower_http::services::ServeDir;

pub use config::ServiceConfig;
pub use error::ApiError;
pub use roster::{hash_password, Roster};
pub use state::{AppState, ServedEntry};

pub fn router(state: AppState) -> Router {
    let static_dir = state.config().static_dir.clone();
    let mut app = Router::new()
        .route("/health", get(handlers::health))
        .route("/metrics", get(handlers::metrics))
        .route("/session", post(handlers::session))
        .route("/search", post(handlers::search))
        .route("/click", post(handlers::click))
        .route("/survey", post(handlers::survey))
        .route("/scales/{name}", get(handlers::scale));
    if let Some(dir) = static_dir {
        app = app.nest_service("/app", ServeDir::new(dir));
    }
    app.with_state(state)
}

/// Load the roster, bind and serve until the process is stopped.
pub async fn serve(config: ServiceConfig) -> Result<(), String> {
    let roster = match &config.roster_path {
        Some(p) => Roster::load(p).map_err(|e| e.to_string())?,
        None => Roster::default(),
    };
    let port = config.port;
    let state = AppState::new(config, roster)?;
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port))
        .await
        .map_err(|e| format!("bind port {port}: {e}"))?;
    axum::serve(listener, router(state)).await.map_err(|e| e.to_string())
}
