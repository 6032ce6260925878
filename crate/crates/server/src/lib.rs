//! Read-only HTTP service over a packed store.
//!
//! Five endpoints, all `GET`:
//!
//! | path | body |
//! |---|---|
//! | `/api/meta` | `meta.json` bytes |
//! | `/api/summary` | `summary.json` bytes |
//! | `/api/detail/{region}` | chunk holding `region` |
//! | `/api/frame/{ordinal}?track=T&scale=S` | color assignment JSON, or SVG for `Accept: image/svg+xml` |
//! | `/api/map` | configured SVG map, verbatim |
//!
//! Every 200 carries a strong ETag (quoted SHA-256 of the body) and a
//! matching `If-None-Match` yields 304 with an empty body. Errors are
//! `{"error": code, "detail": text}`.

mod config;
mod http;
mod state;

use std::future::Future;
use std::sync::Arc;

pub use config::{ServerConfig, DEFAULT_PORT};
pub use http::router;
pub use state::{ApiError, AppState};

#[derive(Debug, thiserror::Error)]
pub enum ServerError {
    #[error("invalid CORS origin {0:?}")]
    InvalidCorsOrigin(String),
    #[error("default scale {0:?} is not configured")]
    UnknownDefaultScale(String),
    #[error("scale {name:?} cannot be resolved for track {track:?}: {source}")]
    Scale {
        name: String,
        track: String,
        source: crisismap_core::choropleth::ChoroplethError,
    },
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: std::net::SocketAddr,
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Loads the store and map, binds `config.addr` and serves until Ctrl-C.
pub async fn serve(config: ServerConfig) -> Result<(), ServerError> {
    let state = Arc::new(AppState::load(&config)?);
    if let Some(e) = state.store_error() {
        eprintln!("warning: store unavailable, store endpoints will answer 500: {e}");
    }
    if let Some(e) = state.map_error() {
        eprintln!("warning: map unavailable, /api/map will answer 500: {e}");
    }
    for w in state.oversized_chunks(config.soft_budget) {
        eprintln!(
            "warning: chunk {} is {} bytes, above the {}-byte soft budget",
            w.region, w.bytes, w.budget
        );
    }
    let listener = tokio::net::TcpListener::bind(config.addr)
        .await
        .map_err(|source| ServerError::Bind {
            addr: config.addr,
            source,
        })?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    serve_on(listener, router(state), async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}

/// Serves `app` on an already bound listener until `shutdown` resolves.
pub async fn serve_on(
    listener: tokio::net::TcpListener,
    app: axum::Router,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> Result<(), ServerError> {
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await?;
    Ok(())
}
