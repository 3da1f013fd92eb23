use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::narrative::Report;
use crate::perception::{perceive, InteractionDelta, PerceiveError};
use crate::workspace::{main_frames, Id, WorkspaceSnapshot};

pub const CASE_SCHEMA: u32 = 1;

/// One curated before/after workspace pair with its ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationCase {
    pub case_schema: u32,
    pub id: String,
    #[serde(default)]
    pub description: String,
    pub prev_snapshot: WorkspaceSnapshot,
    pub curr_snapshot: WorkspaceSnapshot,
    pub base_report: Report,
    /// Body paragraphs that should change.
    pub target_anchors: BTreeSet<Id>,
    /// Interaction order -> strings whose presence in an edit shows the interaction landed.
    pub markers: BTreeMap<u32, Vec<String>>,
}

#[derive(Debug, thiserror::Error)]
pub enum CaseError {
    #[error("reading {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing {path}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("case {id}: {problem}")]
    Invalid { id: String, problem: String },
    #[error("no case files in {0}")]
    Empty(String),
}

impl EvaluationCase {
    pub fn delta(&self) -> Result<InteractionDelta, PerceiveError> {
        perceive(&self.prev_snapshot, &self.curr_snapshot)
    }

    /// Problems with the case itself; empty when usable.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.case_schema != CASE_SCHEMA {
            out.push(format!("unsupported case_schema {}", self.case_schema));
        }
        let delta = match self.delta() {
            Ok(d) => d,
            Err(e) => {
                out.push(e.to_string());
                return out;
            }
        };
        let mut anchors: BTreeSet<&Id> = main_frames(&self.curr_snapshot).into_iter().map(|f| &f.id).collect();
        anchors.extend(self.base_report.body_anchors());
        for t in &self.target_anchors {
            if !anchors.contains(t) {
                out.push(format!("target {t} is neither a main frame nor a base paragraph"));
            }
        }
        for i in &delta.interactions {
            if !self.markers.contains_key(&i.order) {
                out.push(format!("interaction {} ({}) has no marker entry", i.order, i.kind));
            }
        }
        for o in self.markers.keys() {
            if delta.interaction(*o).is_none() {
                out.push(format!("marker entry {o} matches no interaction"));
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("case serialization is infallible") + "\n"
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}

/// Loads every `*.json` case in `dir`, sorted by file name, and rejects invalid ones.
pub fn load_cases(dir: &Path) -> Result<Vec<EvaluationCase>, CaseError> {
    let shown = dir.display().to_string();
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|source| CaseError::Io {
            path: shown.clone(),
            source,
        })?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CaseError::Empty(shown));
    }
    let mut cases = Vec::new();
    for p in paths {
        let path = p.display().to_string();
        let text = std::fs::read_to_string(&p).map_err(|source| CaseError::Io {
            path: path.clone(),
            source,
        })?;
        let case = EvaluationCase::from_json(&text).map_err(|source| CaseError::Json { path, source })?;
        if let Some(problem) = case.problems().into_iter().next() {
            return Err(CaseError::Invalid { id: case.id, problem });
        }
        cases.push(case);
    }
    Ok(cases)
}
