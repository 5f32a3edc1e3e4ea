//! HTTP API behind the review UI.
//!
//! Read endpoints work from snapshots taken at startup plus the in-memory
//! review and SUS logs. Writes go through a single writer thread and are
//! acknowledged only once they are on disk.

mod routes;
mod state;
pub mod summary;

use std::net::SocketAddr;

use axum::Router;

use mammo_core::pipeline::PipelineError;
use mammo_core::store::StoreError;
use mammo_core::study::StudyError;

pub use routes::app;
pub use state::{AppState, ServiceConfig, StudySession};

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("no store at {0}; run `mammo-eval ingest` first")]
    StoreNotFound(String),
    #[error("port {0} is already in use")]
    PortInUse(u16),
    #[error("startup failed: {0}")]
    Startup(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Study(#[from] StudyError),
    #[error("the log writer has stopped")]
    WriterGone,
    #[error("could not persist record: {0}")]
    Persist(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Loads the store and serves until Ctrl-C.
pub async fn serve(cfg: ServiceConfig) -> Result<(), ServiceError> {
    let state = AppState::load(&cfg)?;
    let router: Router = app(state, cfg.ui_dir.as_deref());
    let addr = SocketAddr::from(([127, 0, 0, 1], cfg.port));
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| match e.kind() {
        std::io::ErrorKind::AddrInUse => ServiceError::PortInUse(cfg.port),
        _ => ServiceError::Io(e),
    })?;
    tracing::info!("listening on http://{addr}");
    axum::serve(listener, router)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
