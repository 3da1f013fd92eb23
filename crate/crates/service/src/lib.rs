//! HTTP service around the core pipeline: sessions with append-only snapshot history,
//! asynchronous generate/refine jobs, report undo/redo and manual edits, all recorded in
//! a JSON-lines event log per session.

mod api;
mod config;
mod error;
pub mod session;
mod store;

pub use api::{router, serve};
pub use config::{ServiceConfig, DEFAULT_BIND, DEFAULT_DATA_DIR};
pub use error::{Direction, ServiceError};
pub use session::{
    execute, replay, Event, EventRecord, HistoryEntry, JobError, JobKind, JobStatus, JobTask, Origin, Provenance,
    Session, Tag, EVENT_SCHEMA, INTERRUPTED,
};
pub use store::{
    agents_for, read_log, CreateSession, JobView, ReportState, ReportView, SessionView, SnapshotAccepted, Store,
};

/// Version stamped on every response body.
pub const API_SCHEMA: u32 = 1;
