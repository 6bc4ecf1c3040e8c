//! Stateless HTTP+JSON exploration service over the slalom core.
//!
//! Every route is a pure function of the [`SessionConfig`] fixed at startup
//! and the request body. See `API.md` for the request and response schema.

mod error;
mod handlers;

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use axum::http::{header, HeaderValue, Method};
use axum::routing::{get, post};
use axum::Router;
use serde::{Deserialize, Serialize};
use slalom_core::amplitude::DEFAULT_HORIZON_PERIODS;
use slalom_core::units::argon_near_ir;
use slalom_core::FieldParams;
use tower_http::cors::{AllowOrigin, CorsLayer};

pub use error::ApiError;
pub use handlers::*;

/// Largest distance-field grid served, `(n_re, n_im)`.
pub const MAX_GRID: (usize, usize) = (1200, 800);
/// Supported Keldysh parameters for request-supplied fields.
pub const GAMMA_RANGE: (f64, f64) = (0.1, 1.5);

/// Startup configuration shared read-only by all requests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    /// Field used when a request carries none.
    pub field: FieldParams,
    /// Detection time after `t0`, in laser periods, unless a request overrides it.
    pub horizon_periods: f64,
    /// Resolution cap `(n_re, n_im)` for distance-field grids.
    pub max_grid: (usize, usize),
    /// Per-request compute budget.
    pub timeout_ms: u64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            field: argon_near_ir(),
            horizon_periods: DEFAULT_HORIZON_PERIODS,
            max_grid: MAX_GRID,
            timeout_ms: 30_000,
        }
    }
}

impl SessionConfig {
    pub fn timeout(&self) -> Duration {
        Duration::from_millis(self.timeout_ms)
    }
}

/// CORS for dashboards served from `localhost` or `127.0.0.1` on any port.
fn cors() -> CorsLayer {
    let local = |origin: &HeaderValue, _: &_| {
        let o = origin.as_bytes();
        ["http://localhost", "http://127.0.0.1", "https://localhost", "https://127.0.0.1"]
            .iter()
            .any(|base| o.strip_prefix(base.as_bytes()).is_some_and(|rest| rest.is_empty() || rest[0] == b':'))
    };
    CorsLayer::new()
        .allow_origin(AllowOrigin::predicate(local))
        .allow_methods([Method::GET, Method::POST, Method::OPTIONS])
        .allow_headers([header::CONTENT_TYPE])
}

pub fn router(config: SessionConfig) -> Router {
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/config", get(handlers::config))
        .route("/saddle", post(handlers::saddle))
        .route("/tca", post(handlers::tca))
        .route("/branchmap", post(handlers::branchmap))
        .route("/contour/auto", post(handlers::contour_auto))
        .route("/contour/validate", post(handlers::contour_validate))
        .route("/trajectory", post(handlers::trajectory))
        .route("/amplitude", post(handlers::amplitude))
        .layer(cors())
        .with_state(Arc::new(config))
}

/// Serves until Ctrl-C.
pub async fn serve(config: SessionConfig, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(config))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

/// Blocking entry point that owns its runtime.
pub fn run(config: SessionConfig, addr: SocketAddr) -> std::io::Result<()> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?
        .block_on(serve(config, addr))
}
