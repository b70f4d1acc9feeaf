// SPDX-License-Identifier: Apache-2.0

//! axum router over a shared [`Controller`].
//!
//! Bodies are read as raw bytes and parsed here so that every schema
//! problem maps to 400 rather than to an extractor rejection code.

use std::io;
use std::net::SocketAddr;
use std::sync::Arc;
use std::thread::JoinHandle;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use intentd_core::intent::{IntentError, SubmitError};
use intentd_core::timing::timed_add;
use intentd_core::{Controller, IntentId};
use tokio::sync::oneshot;

use crate::doc::{
    BatchRequestDocument, BatchResultDocument, ErrorDocument, HealthDocument, IntentRequestDocument,
    IntentResponseDocument,
};

pub const DEFAULT_LISTEN: &str = "127.0.0.1:8181";

struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl ToString) -> Self {
        Self {
            status,
            message: message.to_string(),
        }
    }

    fn bad_request(message: impl ToString) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(ErrorDocument { error: self.message })).into_response()
    }
}

impl From<SubmitError> for ApiError {
    fn from(err: SubmitError) -> Self {
        match err {
            SubmitError::Validation(e) => Self::new(StatusCode::UNPROCESSABLE_ENTITY, e),
            SubmitError::Capacity { .. } => Self::new(StatusCode::CONFLICT, err),
        }
    }
}

impl From<IntentError> for ApiError {
    fn from(err: IntentError) -> Self {
        match err {
            IntentError::NotFound(_) => Self::new(StatusCode::NOT_FOUND, err),
            IntentError::IllegalState { .. } | IntentError::OwnedByParent { .. } => {
                Self::new(StatusCode::CONFLICT, err)
            }
        }
    }
}

type Ctl = State<Arc<Controller>>;

fn parse_id(raw: &str) -> Result<IntentId, ApiError> {
    raw.parse()
        .map_err(|_| ApiError::new(StatusCode::NOT_FOUND, format!("intent {raw} not found")))
}

fn parse_request(body: &[u8]) -> Result<IntentRequestDocument, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed body: {e}")))
}

async fn create_intent(State(ctl): Ctl, body: Bytes) -> Result<Response, ApiError> {
    let request = parse_request(&body)?
        .to_request()
        .map_err(ApiError::bad_request)?;
    let submitted = ctl.submit(request)?;
    let intent = ctl.get(submitted.id)?;
    Ok((StatusCode::CREATED, Json(IntentResponseDocument::from(&intent))).into_response())
}

async fn create_batch(State(ctl): Ctl, body: Bytes) -> Result<Response, ApiError> {
    let batch = BatchRequestDocument::from_json(&body).map_err(ApiError::bad_request)?;
    let request = batch.request.to_request().map_err(ApiError::bad_request)?;
    let count = usize::try_from(batch.count).map_err(|_| ApiError::bad_request("`count` too large"))?;
    let result = timed_add(&ctl, &request, count)
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e))?;
    if result.submitted == 0 && result.capacity_exhausted {
        let capacity = ctl.capacity().unwrap_or_default();
        return Err(SubmitError::Capacity { capacity }.into());
    }
    Ok((StatusCode::CREATED, Json(BatchResultDocument::from(result))).into_response())
}

async fn list_intents(State(ctl): Ctl) -> Json<Vec<IntentResponseDocument>> {
    Json(ctl.list().iter().map(IntentResponseDocument::from).collect())
}

async fn get_intent(State(ctl): Ctl, Path(raw): Path<String>) -> Result<Json<IntentResponseDocument>, ApiError> {
    let intent = ctl.get(parse_id(&raw)?)?;
    Ok(Json(IntentResponseDocument::from(&intent)))
}

async fn delete_intent(State(ctl): Ctl, Path(raw): Path<String>) -> Result<StatusCode, ApiError> {
    ctl.withdraw(parse_id(&raw)?)?;
    Ok(StatusCode::NO_CONTENT)
}

async fn health(State(ctl): Ctl) -> Json<HealthDocument> {
    Json(ctl.health().into())
}

async fn reset(State(ctl): Ctl) -> StatusCode {
    ctl.purge();
    StatusCode::NO_CONTENT
}

pub fn router(controller: Arc<Controller>) -> Router {
    Router::new()
        .route("/intents", get(list_intents).post(create_intent))
        .route("/intents/batch", post(create_batch))
        .route("/intents/{id}", get(get_intent).delete(delete_intent))
        .route("/health", get(health))
        .route("/reset", post(reset))
        .with_state(controller)
}

/// Serve until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    controller: Arc<Controller>,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> io::Result<()> {
    tracing::info!(addr = %listener.local_addr()?, "REST northbound listening");
    axum::serve(listener, router(controller))
        .with_graceful_shutdown(shutdown)
        .await
}

/// A server running on its own thread and runtime. Dropping it shuts the
/// server down and joins the thread.
#[derive(Debug)]
pub struct RestServer {
    addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<io::Result<()>>>,
}

impl RestServer {
    /// Bind `addr` (port 0 picks a free port) and start serving.
    pub fn spawn(addr: SocketAddr, controller: Arc<Controller>) -> io::Result<Self> {
        let listener = std::net::TcpListener::bind(addr)?;
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?;
        let runtime = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(std::thread::available_parallelism().map_or(2, |n| n.get().min(4)))
            .thread_name("intentd-rest")
            .enable_all()
            .build()?;
        let (tx, rx) = oneshot::channel::<()>();
        let thread = std::thread::Builder::new()
            .name("intentd-rest-main".into())
            .spawn(move || {
                runtime.block_on(async move {
                    let listener = tokio::net::TcpListener::from_std(listener)?;
                    serve(listener, controller, async {
                        let _ = rx.await;
                    })
                    .await
                })
            })?;
        Ok(Self {
            addr,
            shutdown: Some(tx),
            thread: Some(thread),
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// `http://host:port`
    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn shutdown(mut self) -> io::Result<()> {
        self.stop()
    }

    fn stop(&mut self) -> io::Result<()> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        match self.thread.take() {
            Some(handle) => handle
                .join()
                .unwrap_or_else(|_| Err(io::Error::other("REST server thread panicked"))),
            None => Ok(()),
        }
    }
}

impl Drop for RestServer {
    fn drop(&mut self) {
        let _ = self.stop();
    }
}
