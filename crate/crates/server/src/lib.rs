//! HTTP service for running real-vs-fake studies and probe-injected
//! annotation tasks.
//!
//! All state changes are events: each is validated, appended durably to
//! `events.jsonl`, and only then applied and acknowledged. Restarting from
//! the log (plus the latest snapshot) rebuilds the exact same [`State`].
//! Clients only ever see opaque image handles, never stimulus ids, files,
//! provenance or probe flags.

mod api;
pub mod config;
pub mod error;
pub mod state;
pub mod store;

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{SystemTime, UNIX_EPOCH};

use cellprobe::catalog::{load_manifest, ManifestEntry, MANIFEST_FILE};

pub use api::router;
pub use config::{ConfigError, ServerConfig};
pub use error::ApiError;
pub use state::{Event, EventRecord, State, StoredReply};
pub use store::{EventStore, StoreError};

#[derive(Debug, thiserror::Error)]
pub enum StartError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("catalog: {0}")]
    Catalog(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The image catalog studies and tasks draw their stimuli from.
#[derive(Debug, Clone, Default)]
pub struct Catalog {
    pub dir: PathBuf,
    pub entries: Vec<ManifestEntry>,
    files: HashMap<String, String>,
}

impl Catalog {
    pub fn new(dir: PathBuf, entries: Vec<ManifestEntry>) -> Self {
        let files = entries.iter().map(|e| (e.id.clone(), e.file.clone())).collect();
        Self { dir, entries, files }
    }

    /// Load `dir/manifest.json`; a missing manifest gives an empty catalog.
    pub fn load(dir: PathBuf) -> Result<Self, StartError> {
        if !dir.join(MANIFEST_FILE).exists() {
            tracing::warn!(dir = %dir.display(), "no catalog manifest; studies and tasks cannot be created");
            return Ok(Self::new(dir, Vec::new()));
        }
        let entries = load_manifest(&dir).map_err(|e| StartError::Catalog(e.to_string()))?;
        Ok(Self::new(dir, entries))
    }

    pub fn file_of(&self, id: &str) -> Option<&str> {
        self.files.get(id).map(String::as_str)
    }
}

struct Inner {
    state: State,
    store: EventStore,
}

/// Shared handle to the running service.
#[derive(Clone)]
pub struct App {
    inner: Arc<Mutex<Inner>>,
    catalog: Arc<Catalog>,
    config: Arc<ServerConfig>,
}

pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

impl App {
    pub fn open(config: ServerConfig) -> Result<Self, StartError> {
        let catalog = Catalog::load(config.catalog_dir.clone())?;
        Self::with_catalog(config, catalog)
    }

    pub fn with_catalog(config: ServerConfig, catalog: Catalog) -> Result<Self, StartError> {
        let initial = State::new(config.scoring);
        let (store, state) = EventStore::open(&config.data_dir, config.snapshot_every, initial)?;
        tracing::info!(events = state.last_seq, "state restored");
        Ok(Self {
            inner: Arc::new(Mutex::new(Inner { state, store })),
            catalog: Arc::new(catalog),
            config: Arc::new(config),
        })
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|p| p.into_inner())
    }

    /// Copy of the current state.
    pub fn state(&self) -> State {
        self.lock().state.clone()
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn config(&self) -> &ServerConfig {
        &self.config
    }

    /// Read-only access to the state.
    pub fn read<T>(&self, f: impl FnOnce(&State) -> T) -> T {
        f(&self.lock().state)
    }

    /// Validate, persist, then apply the event built by `build`. A repeated
    /// idempotency `token` returns the first reply without a new event.
    pub fn commit(
        &self,
        token: Option<String>,
        build: impl FnOnce(&State, u64) -> Result<Event, ApiError>,
    ) -> Result<StoredReply, ApiError> {
        let mut inner = self.lock();
        if let Some(reply) = token.as_ref().and_then(|t| inner.state.tokens.get(t)) {
            return Ok(reply.clone());
        }
        let seq = inner.state.last_seq + 1;
        let event = build(&inner.state, seq)?;
        let rec = EventRecord {
            seq,
            timestamp: now_ms(),
            token,
            event,
        };
        inner.state.validate(&rec)?;
        inner
            .store
            .append(&rec)
            .map_err(|e| ApiError::internal(e.to_string()))?;
        let reply = inner.state.apply(&rec);
        let Inner { state, store } = &mut *inner;
        if let Err(e) = store.maybe_snapshot(state) {
            // The event is already durable; a missed snapshot only slows restart.
            tracing::error!(error = %e, "snapshot failed");
        }
        Ok(reply)
    }

    /// Force a snapshot of the current state.
    pub fn snapshot(&self) -> Result<(), StoreError> {
        let mut inner = self.lock();
        let Inner { state, store } = &mut *inner;
        store.snapshot(state)
    }
}

/// Serve `app` on an already-bound listener until the future is dropped.
pub async fn serve(app: App, listener: tokio::net::TcpListener) -> std::io::Result<()> {
    axum::serve(listener, router(app)).await
}
