//! Session state as a fold over its event log. Live commits, restart recovery and replay
//! all go through [`Session::apply`].

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use sensemap_core::agents::{AgentError, Agents, IntentInference, ScopeRepair, Source};
use sensemap_core::narrative::{check_anchoring, diff_reports, serialize_context, Report, RevisionDiff};
use sensemap_core::perception::{perceive, InteractionDelta};
use sensemap_core::workspace::{validate, WorkspaceSnapshot};

use crate::error::{Direction, ServiceError};

pub const EVENT_SCHEMA: u32 = 1;

/// Failure stage recorded for jobs cut off by a restart.
pub const INTERRUPTED: &str = "interrupted";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobKind {
    Generate,
    Refine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    Pending,
    Reasoning,
    Refining,
    Done,
    Failed,
}

impl JobStatus {
    pub fn is_terminal(self) -> bool {
        matches!(self, JobStatus::Done | JobStatus::Failed)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobError {
    pub stage: String,
    pub cause: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Generate,
    Refine,
    #[serde(rename = "user-edit")]
    UserEdit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tag {
    #[serde(rename = "prompt")]
    Prompt,
    #[serde(rename = "generation")]
    Generation,
    #[serde(rename = "user-edit")]
    UserEdit,
}

/// What caused one sentence change: an interaction order or a tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Provenance {
    Interaction(u32),
    Tag(Tag),
}

impl From<Source> for Provenance {
    fn from(s: Source) -> Self {
        match s {
            Source::Interaction(o) => Provenance::Interaction(o),
            Source::Prompt => Provenance::Tag(Tag::Prompt),
        }
    }
}

/// One report revision with everything needed to explain it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub origin: Origin,
    /// Snapshot the report reflects.
    pub snapshot_version: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub job_id: Option<String>,
    pub report: Report,
    pub diff: RevisionDiff,
    #[serde(default)]
    pub reasoning: Vec<IntentInference>,
    /// Index-aligned with `diff.changes`.
    pub provenance: Vec<Vec<Provenance>>,
    #[serde(default)]
    pub scope_repairs: Vec<ScopeRepair>,
}

fn tagged(diff: &RevisionDiff, tag: Tag) -> Vec<Vec<Provenance>> {
    vec![vec![Provenance::Tag(tag)]; diff.changes.len()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    SessionCreated {
        session_id: String,
        snapshot: WorkspaceSnapshot,
    },
    SnapshotSaved {
        snapshot: WorkspaceSnapshot,
    },
    JobStarted {
        job_id: String,
        kind: JobKind,
        snapshot_version: u64,
    },
    JobFinished {
        job_id: String,
        entry: HistoryEntry,
    },
    JobFailed {
        job_id: String,
        error: JobError,
    },
    CursorMoved {
        cursor: usize,
    },
    ReportEdited {
        entry: HistoryEntry,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub event_schema: u32,
    pub seq: u64,
    pub at: DateTime<Utc>,
    #[serde(flatten)]
    pub event: Event,
}

/// Inputs of one pipeline run, captured when the job is triggered.
#[derive(Debug, Clone)]
pub struct JobTask {
    pub job_id: String,
    pub session_id: String,
    pub kind: JobKind,
    pub curr: WorkspaceSnapshot,
    /// Refinement only: the snapshot behind the active report, the report and the delta.
    pub base: Option<(WorkspaceSnapshot, Report, InteractionDelta)>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Session {
    pub id: String,
    pub snapshots: Vec<WorkspaceSnapshot>,
    pub history: Vec<HistoryEntry>,
    pub cursor: Option<usize>,
    pub active_job: Option<(String, JobKind)>,
    pub events: Vec<EventRecord>,
}

impl Session {
    pub fn latest(&self) -> &WorkspaceSnapshot {
        self.snapshots.last().expect("sessions start with a snapshot")
    }

    pub fn snapshot(&self, version: u64) -> Option<&WorkspaceSnapshot> {
        self.snapshots.iter().find(|s| s.version == version)
    }

    pub fn active(&self) -> Option<&HistoryEntry> {
        self.cursor.map(|c| &self.history[c])
    }

    pub fn next_seq(&self) -> u64 {
        self.events.len() as u64
    }

    fn ensure_idle(&self) -> Result<(), ServiceError> {
        match &self.active_job {
            Some((job_id, _)) => Err(ServiceError::Busy { job_id: job_id.clone() }),
            None => Ok(()),
        }
    }

    /// Whether `event` can be folded into the current state.
    pub fn check(&self, event: &Event) -> Result<(), String> {
        let active_is = |job_id: &str| match &self.active_job {
            Some((active, _)) if active == job_id => Ok(()),
            _ => Err(format!("job {job_id} is not active")),
        };
        match event {
            Event::SessionCreated { .. } if !self.events.is_empty() => Err("session created twice".into()),
            Event::SessionCreated { .. } => Ok(()),
            _ if self.events.is_empty() => Err("event before session creation".into()),
            Event::SnapshotSaved { snapshot } if snapshot.version != self.latest().version + 1 => {
                Err(format!("snapshot version {} out of sequence", snapshot.version))
            }
            Event::JobStarted { job_id, .. } if self.active_job.is_some() => {
                Err(format!("job {job_id} started while another is active"))
            }
            Event::JobFinished { job_id, .. } | Event::JobFailed { job_id, .. } => active_is(job_id),
            Event::CursorMoved { cursor } if *cursor >= self.history.len() => Err(format!("cursor {cursor} out of range")),
            Event::ReportEdited { .. } if self.cursor.is_none() => Err("edit without a report".into()),
            _ => Ok(()),
        }
    }

    /// Folds one event into the state and appends it to the in-memory log. Leaves the
    /// state untouched when [`check`](Self::check) fails.
    pub fn apply(&mut self, record: EventRecord) -> Result<(), String> {
        self.check(&record.event)?;
        match &record.event {
            Event::SessionCreated { session_id, snapshot } => {
                self.id = session_id.clone();
                self.snapshots.push(snapshot.clone());
            }
            Event::SnapshotSaved { snapshot } => self.snapshots.push(snapshot.clone()),
            Event::JobStarted { job_id, kind, .. } => self.active_job = Some((job_id.clone(), *kind)),
            Event::JobFinished { entry, .. } => {
                self.active_job = None;
                self.push_entry(entry.clone());
            }
            Event::JobFailed { .. } => self.active_job = None,
            Event::CursorMoved { cursor } => self.cursor = Some(*cursor),
            Event::ReportEdited { entry } => self.push_entry(entry.clone()),
        }
        self.events.push(record);
        Ok(())
    }

    /// Appends after the cursor, dropping any redo tail.
    fn push_entry(&mut self, entry: HistoryEntry) {
        let keep = self.cursor.map_or(0, |c| c + 1);
        self.history.truncate(keep);
        self.history.push(entry);
        self.cursor = Some(self.history.len() - 1);
    }

    // ---- preconditions: each returns the event to commit --------------------------------

    pub fn check_snapshot(&self, snapshot: &WorkspaceSnapshot) -> Result<Event, ServiceError> {
        let expected = self.latest().version + 1;
        if snapshot.version != expected {
            return Err(ServiceError::VersionConflict {
                expected,
                got: snapshot.version,
            });
        }
        let mut violations: Vec<String> = validate(snapshot).iter().map(ToString::to_string).collect();
        violations.extend(corpus_changes(self.latest(), snapshot));
        if !violations.is_empty() {
            return Err(ServiceError::Validation { violations });
        }
        Ok(Event::SnapshotSaved {
            snapshot: snapshot.clone(),
        })
    }

    /// Builds the task a trigger would start, or the reason it cannot start.
    pub fn job_task(&self, kind: JobKind, job_id: &str) -> Result<JobTask, ServiceError> {
        self.ensure_idle()?;
        let curr = self.latest().clone();
        let base = match (kind, self.active()) {
            (JobKind::Generate, Some(_)) => return Err(ServiceError::ReportExists),
            (JobKind::Generate, None) => None,
            (JobKind::Refine, None) => return Err(ServiceError::NoReport),
            (JobKind::Refine, Some(entry)) => {
                let prev = self
                    .snapshot(entry.snapshot_version)
                    .ok_or_else(|| ServiceError::Storage(format!("snapshot {} missing", entry.snapshot_version)))?;
                if prev.version == curr.version {
                    return Err(ServiceError::NothingToRefine);
                }
                let delta = perceive(prev, &curr).map_err(|e| ServiceError::Pipeline {
                    stage: "perception".into(),
                    cause: e.to_string(),
                })?;
                if delta.is_vacuous() {
                    return Err(ServiceError::NothingToRefine);
                }
                Some((prev.clone(), entry.report.clone(), delta))
            }
        };
        Ok(JobTask {
            job_id: job_id.to_owned(),
            session_id: self.id.clone(),
            kind,
            curr,
            base,
        })
    }

    pub fn check_move(&self, direction: Direction) -> Result<Event, ServiceError> {
        self.ensure_idle()?;
        let c = self.cursor.ok_or(ServiceError::NoReport)?;
        let cursor = match direction {
            Direction::Undo if c > 0 => c - 1,
            Direction::Redo if c + 1 < self.history.len() => c + 1,
            _ => return Err(ServiceError::AtBoundary { direction }),
        };
        Ok(Event::CursorMoved { cursor })
    }

    /// `None` when the edit changes nothing.
    pub fn check_edit(&self, edited: &Report) -> Result<Option<Event>, ServiceError> {
        self.ensure_idle()?;
        let active = self.active().ok_or(ServiceError::NoReport)?;
        if edited.report_schema != active.report.report_schema {
            return Err(ServiceError::BadRequest(format!(
                "unsupported report_schema {}",
                edited.report_schema
            )));
        }
        let snapshot = self
            .snapshot(active.snapshot_version)
            .ok_or_else(|| ServiceError::Storage(format!("snapshot {} missing", active.snapshot_version)))?;
        let violations: Vec<String> = check_anchoring(edited, snapshot).iter().map(ToString::to_string).collect();
        if !violations.is_empty() {
            return Err(ServiceError::Validation { violations });
        }
        let mut report = edited.clone();
        report.version = active.report.version + 1;
        let diff = diff_reports(&active.report, &report);
        if diff.is_empty() && report.components == active.report.components {
            return Ok(None);
        }
        Ok(Some(Event::ReportEdited {
            entry: HistoryEntry {
                origin: Origin::UserEdit,
                snapshot_version: active.snapshot_version,
                job_id: None,
                provenance: tagged(&diff, Tag::UserEdit),
                report,
                diff,
                reasoning: Vec::new(),
                scope_repairs: Vec::new(),
            },
        }))
    }
}

/// Document cards are the fixed corpus of a session: same ids, titles and bodies.
fn corpus_changes(prev: &WorkspaceSnapshot, curr: &WorkspaceSnapshot) -> Vec<String> {
    let key = |s: &WorkspaceSnapshot| {
        let mut v: Vec<(String, String, String)> = s
            .documents
            .iter()
            .map(|d| (d.id.to_string(), d.title.clone(), d.body.clone()))
            .collect();
        v.sort();
        v
    };
    if key(prev) == key(curr) {
        Vec::new()
    } else {
        vec!["document cards must keep the ids, titles and bodies of the session corpus".into()]
    }
}

fn stage_error(stage: &str, e: AgentError) -> JobError {
    let stage = match &e {
        AgentError::Backend(_) => stage,
        AgentError::Schema { schema, .. } => schema.as_str(),
        AgentError::Perceive(_) => "perception",
        _ => stage,
    };
    JobError {
        stage: stage.to_owned(),
        cause: e.to_string(),
    }
}

/// Runs the pipeline for a task. `on_stage` is told when reasoning and refining begin.
pub fn execute(agents: &Agents, task: &JobTask, on_stage: impl Fn(JobStatus)) -> Result<HistoryEntry, JobError> {
    let context = serialize_context(&task.curr).map_err(|v| JobError {
        stage: "context".into(),
        cause: v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "),
    })?;
    match &task.base {
        None => {
            on_stage(JobStatus::Refining);
            let report = agents.generate_initial(&context).map_err(|e| stage_error("generation", e))?;
            let diff = diff_reports(&Report::new(0, Vec::new()), &report);
            Ok(HistoryEntry {
                origin: Origin::Generate,
                snapshot_version: task.curr.version,
                job_id: Some(task.job_id.clone()),
                provenance: tagged(&diff, Tag::Generation),
                report,
                diff,
                reasoning: Vec::new(),
                scope_repairs: Vec::new(),
            })
        }
        Some((_, report, delta)) => {
            on_stage(JobStatus::Reasoning);
            let mut inferences = Vec::new();
            if let Some(adj) = delta.prompt_adjustment.as_ref().filter(|a| a.affects_report()) {
                inferences.push(agents.infer_system(adj, report).map_err(|e| stage_error("system_inference", e))?);
            }
            if !delta.interactions.is_empty() {
                inferences.extend(
                    agents
                        .infer_interactions(delta, &task.curr, report)
                        .map_err(|e| stage_error("interaction_inference", e))?,
                );
            }
            on_stage(JobStatus::Refining);
            let r = agents
                .refine(report, &inferences, &context)
                .map_err(|e| stage_error("refinement", e))?;
            Ok(HistoryEntry {
                origin: Origin::Refine,
                snapshot_version: task.curr.version,
                job_id: Some(task.job_id.clone()),
                report: r.new_report,
                diff: r.diff,
                reasoning: r.reasoning,
                provenance: r
                    .provenance
                    .into_iter()
                    .map(|ps| ps.into_iter().map(Provenance::from).collect())
                    .collect(),
                scope_repairs: r.scope_repairs,
            })
        }
    }
}

/// Rebuilds a session from its log, re-running every job with `agents_for` instead of
/// trusting the logged results. Failed jobs are expected to fail again.
pub fn replay(
    events: &[EventRecord],
    agents_for: impl Fn(&WorkspaceSnapshot) -> Agents,
) -> Result<Session, String> {
    let mut s = Session::default();
    let mut pending: Option<Result<HistoryEntry, JobError>> = None;
    for rec in events {
        let mut rec = rec.clone();
        match &mut rec.event {
            Event::JobStarted { job_id, kind, .. } => {
                let task = s.job_task(*kind, job_id).map_err(|e| format!("replaying {job_id}: {e}"))?;
                pending = Some(execute(&agents_for(&task.curr), &task, |_| {}));
            }
            Event::JobFinished { job_id, entry } => match pending.take() {
                Some(Ok(e)) => *entry = e,
                Some(Err(e)) => return Err(format!("job {job_id} failed on replay: {}: {}", e.stage, e.cause)),
                None => return Err(format!("job {job_id} finished without starting")),
            },
            Event::JobFailed { job_id, error } => {
                let outcome = pending.take();
                if error.stage != INTERRUPTED && matches!(outcome, Some(Ok(_))) {
                    return Err(format!("job {job_id} succeeded on replay but failed originally"));
                }
            }
            _ => {}
        }
        s.apply(rec)?;
    }
    Ok(s)
}
