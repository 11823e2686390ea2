//! Local HTTP service exposing one annotation project to a browser client.
//!
//! All mutations go through a single write lock, so concurrent PUTs to the
//! same entry are applied one after the other and readers never observe a
//! half-applied update.

pub mod wire;

use std::net::{Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use iat_core::{Project, ProjectError, Taxonomy};
use serde::Deserialize;
use thiserror::Error;
use tokio::sync::{oneshot, RwLock};
use tokio::task::JoinHandle;

use wire::{DocumentDoc, ErrorCode, ErrorDoc, ProjectDoc, TaxonomyDoc};

pub const DEFAULT_PORT: u16 = 8765;
pub const MIN_PORT: u16 = 1024;

/// Where the served project comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProjectSource {
    /// A `.iatproj` file, re-saved after every change.
    File(PathBuf),
    /// One image with its labels file; nothing but `<image>.iat` is written.
    SingleImage { image: PathBuf, labels: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceConfig {
    pub port: u16,
    pub source: ProjectSource,
}

impl ServiceConfig {
    pub fn new(port: u16, project_path: impl Into<PathBuf>) -> Self {
        ServiceConfig { port, source: ProjectSource::File(project_path.into()) }
    }

    pub fn single_image(port: u16, image: impl Into<PathBuf>, labels: impl Into<PathBuf>) -> Self {
        ServiceConfig { port, source: ProjectSource::SingleImage { image: image.into(), labels: labels.into() } }
    }
}

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("port {0} is outside {MIN_PORT}..=65535")]
    BadPort(u16),
    #[error(transparent)]
    Project(#[from] ProjectError),
    #[error("cannot listen on {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
}

struct AppState {
    project: Project,
    project_file: Option<PathBuf>,
    taxonomy: Taxonomy,
}

type Shared = Arc<RwLock<AppState>>;

/// A running service. Dropping it without calling [`ServiceHandle::shutdown`]
/// leaves the server running until the runtime stops.
pub struct ServiceHandle {
    addr: SocketAddr,
    stop: oneshot::Sender<()>,
    task: JoinHandle<std::io::Result<()>>,
}

impl ServiceHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stops accepting connections and waits for in-flight requests, so an
    /// accepted PUT is always fully written.
    pub async fn shutdown(self) -> std::io::Result<()> {
        let _ = self.stop.send(());
        self.task.await.map_err(std::io::Error::other)?
    }
}

/// Loads the project and its taxonomy and starts serving on
/// `127.0.0.1:<port>`.
pub async fn start_service(config: ServiceConfig) -> Result<ServiceHandle, ServiceError> {
    if config.port < MIN_PORT {
        return Err(ServiceError::BadPort(config.port));
    }
    let (project, project_file) = match &config.source {
        ProjectSource::File(path) => (Project::open(path)?, Some(path.clone())),
        ProjectSource::SingleImage { image, labels } => (Project::single_image(image, labels)?, None),
    };
    let taxonomy = project.load_taxonomy()?;
    let state = Arc::new(RwLock::new(AppState { project, project_file, taxonomy }));

    let addr = SocketAddr::from((Ipv4Addr::LOCALHOST, config.port));
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(|source| ServiceError::Bind { addr, source })?;
    let addr = listener.local_addr().map_err(|source| ServiceError::Bind { addr, source })?;
    let (stop, stopped) = oneshot::channel::<()>();
    let app = router(state);
    let task = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = stopped.await;
            })
            .await
    });
    tracing::info!(%addr, "serving");
    Ok(ServiceHandle { addr, stop, task })
}

fn router(state: Shared) -> Router {
    Router::new()
        .route("/", get(index_page))
        .route("/api/project", get(get_project))
        .route("/api/project/cursor", post(post_cursor))
        .route("/api/taxonomy", get(get_taxonomy))
        .route("/api/images/:index", get(get_image))
        .route("/api/images/:index/annotations", get(get_annotations).put(put_annotations))
        .fallback(|| async { error(StatusCode::NOT_FOUND, ErrorCode::NotFound, "no such endpoint", None) })
        .with_state(state)
}

fn error(status: StatusCode, code: ErrorCode, message: impl Into<String>, index: Option<usize>) -> Response {
    let body = ErrorDoc { code: code.as_str().to_string(), message: message.into(), annotation_index: index };
    (status, Json(body)).into_response()
}

fn internal(e: impl std::fmt::Display) -> Response {
    tracing::error!("{e}");
    error(StatusCode::INTERNAL_SERVER_ERROR, ErrorCode::Internal, e.to_string(), None)
}

/// Parses the `{index}` path segment; `None` unless it names an entry.
fn entry_index(project: &Project, raw: &str) -> Option<usize> {
    raw.parse::<usize>().ok().filter(|&i| i < project.len())
}

fn no_entry(project: &Project, raw: &str) -> Response {
    let msg = format!("no entry {raw}; the project has {}", project.len());
    error(StatusCode::NOT_FOUND, ErrorCode::NotFound, msg, None)
}

async fn index_page() -> &'static str {
    "iat annotation service\n\nGET  /api/project\nPOST /api/project/cursor\nGET  /api/taxonomy\nGET  /api/images/{index}\nGET  /api/images/{index}/annotations\nPUT  /api/images/{index}/annotations\n"
}

async fn get_project(State(state): State<Shared>) -> Json<ProjectDoc> {
    Json(ProjectDoc::from(&state.read().await.project))
}

async fn get_taxonomy(State(state): State<Shared>) -> Json<TaxonomyDoc> {
    Json(TaxonomyDoc::from(&state.read().await.taxonomy))
}

#[derive(Deserialize)]
struct CursorBody {
    index: i64,
}

async fn post_cursor(State(state): State<Shared>, body: Bytes) -> Response {
    let Ok(CursorBody { index }) = serde_json::from_slice(&body) else {
        return error(StatusCode::UNPROCESSABLE_ENTITY, ErrorCode::BadPayload, "expected {\"index\": int}", None);
    };
    let mut guard = state.write().await;
    let st = &mut *guard;
    let mut next = st.project.clone();
    if usize::try_from(index).map_err(|_| ()).and_then(|i| next.set_cursor(i).map_err(|_| ())).is_err() {
        let msg = format!("cursor {index} out of range for {} entries", st.project.len());
        return error(StatusCode::UNPROCESSABLE_ENTITY, ErrorCode::BadPayload, msg, None);
    }
    if let Some(path) = &st.project_file {
        if let Err(e) = next.save(path) {
            return internal(e);
        }
    }
    st.project = next;
    StatusCode::NO_CONTENT.into_response()
}

fn content_type(path: &Path) -> &'static str {
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("png") => "image/png",
        Some("jpg" | "jpeg") => "image/jpeg",
        Some("bmp") => "image/bmp",
        _ => "application/octet-stream",
    }
}

async fn get_image(State(state): State<Shared>, UrlPath(raw): UrlPath<String>) -> Response {
    let path = {
        let st = state.read().await;
        let Some(index) = entry_index(&st.project, &raw) else {
            return no_entry(&st.project, &raw);
        };
        st.project.image_file(index).expect("index checked")
    };
    match tokio::fs::read(&path).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, content_type(&path))], bytes).into_response(),
        Err(e) => internal(format!("{}: {e}", path.display())),
    }
}

fn probe_size(path: &Path) -> Option<(u32, u32)> {
    image::image_dimensions(path).ok()
}

async fn get_annotations(State(state): State<Shared>, UrlPath(raw): UrlPath<String>) -> Response {
    let st = state.read().await;
    let Some(index) = entry_index(&st.project, &raw) else {
        return no_entry(&st.project, &raw);
    };
    match st.project.load_annotations(index) {
        Ok(Some(set)) => Json(DocumentDoc::from(&set)).into_response(),
        Ok(None) => {
            let image = st.project.image_file(index).expect("index checked");
            let Some((width, height)) = probe_size(&image) else {
                return internal(format!("cannot read the size of {}", image.display()));
            };
            let image_path = st.project.entries()[index].image_path.clone();
            Json(DocumentDoc { image_path, width, height, annotations: Vec::new() }).into_response()
        }
        Err(e) => internal(e),
    }
}

async fn put_annotations(State(state): State<Shared>, UrlPath(raw): UrlPath<String>, body: Bytes) -> Response {
    let mut guard = state.write().await;
    let st = &mut *guard;
    let Some(index) = entry_index(&st.project, &raw) else {
        return no_entry(&st.project, &raw);
    };
    let stored = match st.project.load_annotations(index) {
        Ok(s) => s,
        Err(e) => return internal(e),
    };
    let image_path = st.project.entries()[index].image_path.clone();
    let image_file = st.project.image_file(index).expect("index checked");
    let default_size = || match &stored {
        Some(s) => Some((s.image_width(), s.image_height())),
        None => probe_size(&image_file),
    };
    let previous_next_id = stored.as_ref().map_or(0, |s| s.next_id());
    let set = match wire::build_set(&body, &image_path, default_size, previous_next_id, &st.taxonomy) {
        Ok(set) => set,
        Err(r) => return error(StatusCode::UNPROCESSABLE_ENTITY, r.code, r.message, r.annotation_index),
    };

    let mut next = st.project.clone();
    if let Err(e) = next.save_annotations(index, &set) {
        return internal(e);
    }
    if let Some(path) = &st.project_file {
        if let Err(e) = next.save(path) {
            return internal(e);
        }
    }
    st.project = next;
    StatusCode::NO_CONTENT.into_response()
}
