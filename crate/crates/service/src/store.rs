use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard, RwLock};

use chrono::Utc;
use serde::{Deserialize, Serialize};

use sensemap_core::agents::{Agents, BackendConfig, LlmBackend};
use sensemap_core::narrative::Report;
use sensemap_core::workspace::{validate, DocumentCard, PromptSettings, WorkspaceSnapshot};

use crate::error::{Direction, ServiceError};
use crate::session::*;
use crate::API_SCHEMA;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateSession {
    pub corpus: Vec<DocumentCard>,
    #[serde(default)]
    pub settings: Option<PromptSettings>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportState {
    pub version: u64,
    pub cursor: usize,
    pub history_len: usize,
    pub can_undo: bool,
    pub can_redo: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub api_schema: u32,
    pub id: String,
    pub latest_version: u64,
    pub snapshot_versions: Vec<u64>,
    pub snapshot: WorkspaceSnapshot,
    pub report: Option<ReportState>,
    pub active_job: Option<String>,
    /// `generate` before the first report, `refine` afterwards.
    pub next_trigger: JobKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotAccepted {
    pub api_schema: u32,
    pub session_id: String,
    pub version: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportView {
    pub api_schema: u32,
    pub session_id: String,
    #[serde(flatten)]
    pub state: ReportState,
    pub entry: HistoryEntry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobView {
    pub api_schema: u32,
    pub id: String,
    pub session_id: String,
    pub kind: JobKind,
    pub status: JobStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<JobError>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<HistoryEntry>,
}

struct Slot {
    session: Session,
    log: Option<File>,
}

/// All sessions and jobs. Each session has its own lock (single writer); jobs run
/// outside it and only take it to commit.
pub struct Store {
    data_dir: Option<PathBuf>,
    backend: Arc<dyn LlmBackend>,
    overrides: BackendConfig,
    sessions: RwLock<BTreeMap<String, Arc<Mutex<Slot>>>>,
    jobs: Mutex<BTreeMap<String, JobView>>,
    next_session: AtomicU64,
    next_job: AtomicU64,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|p| p.into_inner())
}

fn numeric_suffix(id: &str) -> u64 {
    id.trim_start_matches(|c: char| !c.is_ascii_digit()).parse().unwrap_or(0)
}

impl Store {
    /// In-memory store; nothing is persisted.
    pub fn in_memory(backend: Arc<dyn LlmBackend>) -> Self {
        Store {
            data_dir: None,
            backend,
            overrides: BackendConfig::default(),
            sessions: RwLock::default(),
            jobs: Mutex::default(),
            next_session: AtomicU64::new(1),
            next_job: AtomicU64::new(1),
        }
    }

    /// Persistent store under `data_dir/sessions`, reloading every logged session.
    /// Jobs that were running when the process stopped are marked failed.
    pub fn open(data_dir: &Path, backend: Arc<dyn LlmBackend>, overrides: BackendConfig) -> Result<Self, ServiceError> {
        let dir = data_dir.join("sessions");
        std::fs::create_dir_all(&dir).map_err(ServiceError::storage)?;
        let mut store = Store::in_memory(backend);
        store.overrides = overrides;
        store.data_dir = Some(data_dir.to_owned());
        let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)
            .map_err(ServiceError::storage)?
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|e| e == "jsonl"))
            .collect();
        paths.sort();
        let (mut max_s, mut max_j) = (0, 0);
        for p in paths {
            let mut session = Session::default();
            for rec in read_log(&p)? {
                session
                    .apply(rec)
                    .map_err(|e| ServiceError::Storage(format!("{}: {e}", p.display())))?;
            }
            let log = OpenOptions::new().append(true).open(&p).map_err(ServiceError::storage)?;
            let mut slot = Slot {
                session,
                log: Some(log),
            };
            if let Some((job_id, _)) = slot.session.active_job.clone() {
                let error = JobError {
                    stage: INTERRUPTED.into(),
                    cause: "the service stopped before the job finished".into(),
                };
                commit(&mut slot, Event::JobFailed { job_id, error })?;
            }
            max_s = max_s.max(numeric_suffix(&slot.session.id));
            for job in jobs_of(&slot.session) {
                max_j = max_j.max(numeric_suffix(&job.id));
                lock(&store.jobs).insert(job.id.clone(), job);
            }
            tracing::info!(session = %slot.session.id, events = slot.session.events.len(), "loaded session");
            store
                .sessions
                .get_mut()
                .unwrap()
                .insert(slot.session.id.clone(), Arc::new(Mutex::new(slot)));
        }
        store.next_session = AtomicU64::new(max_s + 1);
        store.next_job = AtomicU64::new(max_j + 1);
        Ok(store)
    }

    pub fn backend(&self) -> &Arc<dyn LlmBackend> {
        &self.backend
    }

    /// Agents configured from the snapshot's model settings plus environment overrides.
    pub fn agents_for(&self, snapshot: &WorkspaceSnapshot) -> Agents {
        agents_for(&self.backend, &self.overrides, snapshot)
    }

    fn slot(&self, id: &str) -> Result<Arc<Mutex<Slot>>, ServiceError> {
        self.sessions
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound {
                what: "session",
                id: id.to_owned(),
            })
    }

    fn read<R>(&self, id: &str, f: impl FnOnce(&Session) -> R) -> Result<R, ServiceError> {
        let slot = self.slot(id)?;
        let slot = lock(&slot);
        Ok(f(&slot.session))
    }

    pub fn session_ids(&self) -> Vec<String> {
        self.sessions.read().unwrap_or_else(|p| p.into_inner()).keys().cloned().collect()
    }

    /// A copy of the session state, taken under its lock.
    pub fn session_state(&self, id: &str) -> Result<Session, ServiceError> {
        self.read(id, Session::clone)
    }

    pub fn create_session(&self, req: CreateSession) -> Result<SessionView, ServiceError> {
        if req.corpus.is_empty() {
            return Err(ServiceError::BadRequest("corpus must contain at least one document".into()));
        }
        let mut snapshot = WorkspaceSnapshot::new(1, Utc::now(), req.settings.unwrap_or_default());
        snapshot.documents = req.corpus;
        let violations: Vec<String> = validate(&snapshot).iter().map(ToString::to_string).collect();
        if !violations.is_empty() {
            return Err(ServiceError::Validation { violations });
        }
        let id = format!("s{}", self.next_session.fetch_add(1, Ordering::SeqCst));
        let log = match &self.data_dir {
            Some(d) => Some(
                OpenOptions::new()
                    .create_new(true)
                    .append(true)
                    .open(d.join("sessions").join(format!("{id}.jsonl")))
                    .map_err(ServiceError::storage)?,
            ),
            None => None,
        };
        let mut slot = Slot {
            session: Session::default(),
            log,
        };
        commit(
            &mut slot,
            Event::SessionCreated {
                session_id: id.clone(),
                snapshot,
            },
        )?;
        let view = session_view(&slot.session);
        self.sessions
            .write()
            .unwrap_or_else(|p| p.into_inner())
            .insert(id, Arc::new(Mutex::new(slot)));
        Ok(view)
    }

    pub fn session(&self, id: &str) -> Result<SessionView, ServiceError> {
        self.read(id, session_view)
    }

    pub fn save_snapshot(&self, id: &str, snapshot: WorkspaceSnapshot) -> Result<SnapshotAccepted, ServiceError> {
        let slot = self.slot(id)?;
        let mut slot = lock(&slot);
        let event = slot.session.check_snapshot(&snapshot)?;
        commit(&mut slot, event)?;
        Ok(SnapshotAccepted {
            api_schema: API_SCHEMA,
            session_id: id.to_owned(),
            version: snapshot.version,
        })
    }

    /// Stores new prompt settings as the next snapshot version.
    pub fn update_settings(&self, id: &str, settings: PromptSettings) -> Result<SnapshotAccepted, ServiceError> {
        let slot = self.slot(id)?;
        let mut slot = lock(&slot);
        let mut snapshot = slot.session.latest().clone();
        snapshot.version += 1;
        snapshot.timestamp = Utc::now();
        snapshot.prompt_settings = settings;
        let event = slot.session.check_snapshot(&snapshot)?;
        commit(&mut slot, event)?;
        Ok(SnapshotAccepted {
            api_schema: API_SCHEMA,
            session_id: id.to_owned(),
            version: snapshot.version,
        })
    }

    /// Checks preconditions and records the job as started. The caller runs the returned
    /// task with [`run_job`](Self::run_job), normally off the request path.
    pub fn trigger(&self, id: &str, kind: JobKind) -> Result<(JobView, JobTask), ServiceError> {
        let slot = self.slot(id)?;
        let mut slot = lock(&slot);
        let mut task = slot.session.job_task(kind, "")?;
        task.job_id = format!("j{}", self.next_job.fetch_add(1, Ordering::SeqCst));
        commit(
            &mut slot,
            Event::JobStarted {
                job_id: task.job_id.clone(),
                kind,
                snapshot_version: task.curr.version,
            },
        )?;
        let view = JobView {
            api_schema: API_SCHEMA,
            id: task.job_id.clone(),
            session_id: id.to_owned(),
            kind,
            status: JobStatus::Pending,
            error: None,
            result: None,
        };
        lock(&self.jobs).insert(view.id.clone(), view.clone());
        Ok((view, task))
    }

    fn set_status(&self, job_id: &str, status: JobStatus) {
        if let Some(j) = lock(&self.jobs).get_mut(job_id) {
            if !j.status.is_terminal() {
                j.status = status;
            }
        }
    }

    /// Runs a triggered job to completion and commits the outcome. Blocking.
    pub fn run_job(&self, task: JobTask) -> JobView {
        let agents = self.agents_for(&task.curr);
        let outcome = execute(&agents, &task, |s| self.set_status(&task.job_id, s));
        let event = match &outcome {
            Ok(entry) => Event::JobFinished {
                job_id: task.job_id.clone(),
                entry: entry.clone(),
            },
            Err(error) => {
                tracing::warn!(job = %task.job_id, stage = %error.stage, cause = %error.cause, "job failed");
                Event::JobFailed {
                    job_id: task.job_id.clone(),
                    error: error.clone(),
                }
            }
        };
        let committed = self.slot(&task.session_id).and_then(|slot| commit(&mut lock(&slot), event));
        let mut jobs = lock(&self.jobs);
        let job = jobs.get_mut(&task.job_id).expect("triggered jobs are registered");
        match (committed, outcome) {
            (Ok(()), Ok(entry)) => {
                job.status = JobStatus::Done;
                job.result = Some(entry);
            }
            (Ok(()), Err(error)) => {
                job.status = JobStatus::Failed;
                job.error = Some(error);
            }
            (Err(e), _) => {
                job.status = JobStatus::Failed;
                job.error = Some(JobError {
                    stage: "storage".into(),
                    cause: e.to_string(),
                });
            }
        }
        job.clone()
    }

    pub fn job(&self, job_id: &str) -> Result<JobView, ServiceError> {
        lock(&self.jobs).get(job_id).cloned().ok_or_else(|| ServiceError::NotFound {
            what: "job",
            id: job_id.to_owned(),
        })
    }

    pub fn report(&self, id: &str) -> Result<ReportView, ServiceError> {
        self.read(id, report_view)?
    }

    pub fn move_cursor(&self, id: &str, direction: Direction) -> Result<ReportView, ServiceError> {
        let slot = self.slot(id)?;
        let mut slot = lock(&slot);
        let event = slot.session.check_move(direction)?;
        commit(&mut slot, event)?;
        report_view(&slot.session)
    }

    pub fn edit_report(&self, id: &str, report: Report) -> Result<ReportView, ServiceError> {
        let slot = self.slot(id)?;
        let mut slot = lock(&slot);
        if let Some(event) = slot.session.check_edit(&report)? {
            commit(&mut slot, event)?;
        }
        report_view(&slot.session)
    }

    pub fn audit_log(&self, id: &str) -> Result<Vec<EventRecord>, ServiceError> {
        self.read(id, |s| s.events.clone())
    }
}

pub fn agents_for(backend: &Arc<dyn LlmBackend>, overrides: &BackendConfig, snapshot: &WorkspaceSnapshot) -> Agents {
    Agents::new(backend.clone(), overrides.model(&snapshot.prompt_settings.model_config))
}

/// Appends to the log file (if any) before the in-memory state changes.
fn commit(slot: &mut Slot, event: Event) -> Result<(), ServiceError> {
    let record = EventRecord {
        event_schema: EVENT_SCHEMA,
        seq: slot.session.next_seq(),
        at: Utc::now(),
        event,
    };
    slot.session.check(&record.event).map_err(ServiceError::Storage)?;
    if let Some(f) = &mut slot.log {
        let mut line = serde_json::to_string(&record).map_err(ServiceError::storage)?;
        line.push('\n');
        f.write_all(line.as_bytes()).map_err(ServiceError::storage)?;
        f.sync_data().map_err(ServiceError::storage)?;
    }
    slot.session.apply(record).map_err(ServiceError::Storage)
}

/// Reads a JSON-lines log. A torn final line (crash mid-write) is dropped.
pub fn read_log(path: &Path) -> Result<Vec<EventRecord>, ServiceError> {
    let f = File::open(path).map_err(ServiceError::storage)?;
    let lines: Vec<String> = BufReader::new(f)
        .lines()
        .collect::<Result<_, _>>()
        .map_err(ServiceError::storage)?;
    let mut out = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<EventRecord>(line) {
            Ok(r) => out.push(r),
            Err(e) if i + 1 == lines.len() => {
                tracing::warn!(path = %path.display(), "dropping torn last event: {e}");
            }
            Err(e) => return Err(ServiceError::Storage(format!("{}:{}: {e}", path.display(), i + 1))),
        }
    }
    Ok(out)
}

/// Job views reconstructed from a session log, in start order.
fn jobs_of(s: &Session) -> Vec<JobView> {
    let mut out: Vec<JobView> = Vec::new();
    for r in &s.events {
        match &r.event {
            Event::JobStarted { job_id, kind, .. } => out.push(JobView {
                api_schema: API_SCHEMA,
                id: job_id.clone(),
                session_id: s.id.clone(),
                kind: *kind,
                status: JobStatus::Pending,
                error: None,
                result: None,
            }),
            Event::JobFinished { job_id, entry } => {
                if let Some(j) = out.iter_mut().find(|j| &j.id == job_id) {
                    j.status = JobStatus::Done;
                    j.result = Some(entry.clone());
                }
            }
            Event::JobFailed { job_id, error } => {
                if let Some(j) = out.iter_mut().find(|j| &j.id == job_id) {
                    j.status = JobStatus::Failed;
                    j.error = Some(error.clone());
                }
            }
            _ => {}
        }
    }
    out
}

fn report_state(s: &Session) -> Option<ReportState> {
    let cursor = s.cursor?;
    Some(ReportState {
        version: s.history[cursor].report.version,
        cursor,
        history_len: s.history.len(),
        can_undo: cursor > 0,
        can_redo: cursor + 1 < s.history.len(),
    })
}

fn session_view(s: &Session) -> SessionView {
    SessionView {
        api_schema: API_SCHEMA,
        id: s.id.clone(),
        latest_version: s.latest().version,
        snapshot_versions: s.snapshots.iter().map(|x| x.version).collect(),
        snapshot: s.latest().clone(),
        report: report_state(s),
        active_job: s.active_job.as_ref().map(|(j, _)| j.clone()),
        next_trigger: if s.cursor.is_some() { JobKind::Refine } else { JobKind::Generate },
    }
}

fn report_view(s: &Session) -> Result<ReportView, ServiceError> {
    let state = report_state(s).ok_or(ServiceError::NoReport)?;
    Ok(ReportView {
        api_schema: API_SCHEMA,
        session_id: s.id.clone(),
        entry: s.history[state.cursor].clone(),
        state,
    })
}
