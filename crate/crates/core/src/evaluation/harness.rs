use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agents::{Agents, PlanStep, Target};
use crate::narrative::{diff_reports, serialize_context, ComponentKey, Report, RevisionDiff};

use super::case::EvaluationCase;
use super::metrics::{semantic_fidelity_counts, targeted_refinement_counts, MetricCounts, MetricResult};

pub const RESULTS_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Interaction-driven refinement of the base report.
    Refinement,
    /// Fresh generation from the current workspace, diffed against the base report.
    Regeneration,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Refinement => "refinement",
            Mode::Regeneration => "regeneration",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "refinement" => Ok(Mode::Refinement),
            "regeneration" => Ok(Mode::Regeneration),
            other => Err(format!("unknown mode {other:?} (expected refinement or regeneration)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseOutcome {
    pub id: String,
    pub interactions: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<MetricCounts>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<MetricResult>,
    /// Body anchors whose paragraph changed.
    #[serde(default)]
    pub changed_anchors: Vec<String>,
    /// Changed components that no plan step targeted. Always empty in regeneration mode,
    /// which has no plan.
    #[serde(default)]
    pub untargeted_changes: Vec<String>,
    #[serde(default)]
    pub scope_repairs: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnessReport {
    pub results_schema: u32,
    pub mode: Mode,
    pub backend: String,
    pub model: String,
    pub cases: Vec<CaseOutcome>,
    /// Micro-averaged over the cases that completed.
    pub totals: MetricCounts,
    pub aggregate: MetricResult,
    pub failed: usize,
}

struct Produced {
    new_report: Report,
    diff: RevisionDiff,
    steps: Option<Vec<PlanStep>>,
    scope_repairs: usize,
}

fn produce(case: &EvaluationCase, mode: Mode, agents: &Agents) -> Result<Produced, String> {
    match mode {
        Mode::Refinement => {
            let run = agents
                .run(&case.prev_snapshot, &case.curr_snapshot, &case.base_report)
                .map_err(|e| e.to_string())?;
            Ok(match run.result {
                Some(r) => Produced {
                    steps: Some(r.reasoning.iter().flat_map(|i| i.plan.clone()).collect()),
                    scope_repairs: r.scope_repairs.len(),
                    new_report: r.new_report,
                    diff: r.diff,
                },
                None => Produced {
                    new_report: case.base_report.clone(),
                    diff: diff_reports(&case.base_report, &case.base_report),
                    steps: Some(Vec::new()),
                    scope_repairs: 0,
                },
            })
        }
        Mode::Regeneration => {
            let context = serialize_context(&case.curr_snapshot)
                .map_err(|v| format!("invalid workspace: {}", v.len()))?;
            let new_report = agents.generate_initial(&context).map_err(|e| e.to_string())?;
            let diff = diff_reports(&case.base_report, &new_report);
            Ok(Produced {
                new_report,
                diff,
                steps: None,
                scope_repairs: 0,
            })
        }
    }
}

/// Runs and scores one case. Failures are recorded on the outcome, never raised.
pub fn run_case(case: &EvaluationCase, mode: Mode, agents: &Agents) -> CaseOutcome {
    let mut out = CaseOutcome {
        id: case.id.clone(),
        interactions: 0,
        counts: None,
        result: None,
        changed_anchors: Vec::new(),
        untargeted_changes: Vec::new(),
        scope_repairs: 0,
        error: None,
    };
    let delta = match case.delta() {
        Ok(d) => d,
        Err(e) => {
            out.error = Some(e.to_string());
            return out;
        }
    };
    out.interactions = delta.interactions.len();
    let p = match produce(case, mode, agents) {
        Ok(p) => p,
        Err(e) => {
            out.error = Some(e);
            return out;
        }
    };
    let (n_tpp, n_pp, n_tp) = targeted_refinement_counts(&p.diff, &case.target_anchors);
    let (n_tps, n_s, n_rsi, n_si) =
        semantic_fidelity_counts(&p.new_report, &p.diff, &delta, &case.markers, &case.curr_snapshot);
    let counts = MetricCounts {
        n_tpp,
        n_pp,
        n_tp,
        n_tps,
        n_s,
        n_rsi,
        n_si,
    };
    out.counts = Some(counts);
    out.result = Some(counts.result());
    out.changed_anchors = p
        .diff
        .changed_anchors
        .iter()
        .filter_map(ComponentKey::anchor)
        .map(|a| a.to_string())
        .collect();
    if let Some(steps) = &p.steps {
        out.untargeted_changes = untargeted(&case.base_report, &p.new_report, steps);
    }
    out.scope_repairs = p.scope_repairs;
    out
}

/// Components that differ between the reports (content, presence or position) without a
/// plan step allowed to touch them.
fn untargeted(old: &Report, new: &Report, steps: &[PlanStep]) -> Vec<String> {
    if steps.iter().any(|s| s.target == Target::Structure) {
        return Vec::new();
    }
    let keys: BTreeSet<ComponentKey> = old.keys().into_iter().chain(new.keys()).collect();
    keys.into_iter()
        .filter(|k| {
            old.component(k) != new.component(k)
                || (old.position(k).is_some() && new.position(k).is_some() && moved(old, new, k))
        })
        .filter(|k| !steps.iter().any(|s| s.target.covers(k)))
        .map(|k| k.to_string())
        .collect()
}

fn moved(old: &Report, new: &Report, k: &ComponentKey) -> bool {
    let rank = |r: &Report| {
        let shared: Vec<ComponentKey> = r.keys().into_iter().filter(|x| old.component(x).is_some() && new.component(x).is_some()).collect();
        shared.iter().position(|x| x == k)
    };
    rank(old) != rank(new)
}

/// Runs every case (in parallel when the agents allow it) and aggregates in case order.
pub fn run_harness(cases: &[EvaluationCase], mode: Mode, agents: &Agents) -> HarnessReport {
    let outcomes: Vec<CaseOutcome> = if agents.concurrent {
        cases.par_iter().map(|c| run_case(c, mode, agents)).collect()
    } else {
        cases.iter().map(|c| run_case(c, mode, agents)).collect()
    };
    let mut totals = MetricCounts::default();
    for c in outcomes.iter().filter_map(|o| o.counts) {
        totals += c;
    }
    HarnessReport {
        results_schema: RESULTS_SCHEMA,
        mode,
        backend: agents.backend().name().to_owned(),
        model: agents.model().model_name.clone(),
        failed: outcomes.iter().filter(|o| o.error.is_some()).count(),
        aggregate: totals.result(),
        totals,
        cases: outcomes,
    }
}

impl HarnessReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("results serialization is infallible") + "\n"
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }

    /// Fixed-width table, one row per case plus the micro-averaged total.
    pub fn to_table(&self) -> String {
        let width = self.cases.iter().map(|c| c.id.len()).max().unwrap_or(0).max(5);
        let mut s = String::new();
        let _ = writeln!(s, "mode: {}  backend: {}  model: {}", self.mode, self.backend, self.model);
        let _ = writeln!(
            s,
            "{:<width$}  {:>5}  {:>6} {:>6} {:>6}  {:>6} {:>6} {:>6}",
            "case", "inter", "P_tr", "R_tr", "F1_tr", "P_sf", "R_sf", "F1_sf"
        );
        let row = |s: &mut String, id: &str, n: String, r: Option<&MetricResult>, err: Option<&str>| match r {
            Some(r) => {
                let _ = writeln!(
                    s,
                    "{id:<width$}  {n:>5}  {:>6.3} {:>6.3} {:>6.3}  {:>6.3} {:>6.3} {:>6.3}",
                    r.targeted.precision,
                    r.targeted.recall,
                    r.targeted.f1,
                    r.fidelity.precision,
                    r.fidelity.recall,
                    r.fidelity.f1
                );
            }
            None => {
                let _ = writeln!(s, "{id:<width$}  {n:>5}  failed: {}", err.unwrap_or("unknown error"));
            }
        };
        for c in &self.cases {
            row(&mut s, &c.id, c.interactions.to_string(), c.result.as_ref(), c.error.as_deref());
        }
        let total: usize = self.cases.iter().map(|c| c.interactions).sum();
        row(&mut s, "total", total.to_string(), Some(&self.aggregate), None);
        if self.failed > 0 {
            let _ = writeln!(s, "{} case(s) failed", self.failed);
        }
        s
    }

    pub fn results_path(dir: &Path, mode: Mode) -> PathBuf {
        dir.join(format!("results-{mode}.json"))
    }

    pub fn table_path(dir: &Path, mode: Mode) -> PathBuf {
        dir.join(format!("table-{mode}.txt"))
    }

    /// Writes `results-<mode>.json` and `table-<mode>.txt` into `dir`.
    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(Self::results_path(dir, self.mode), self.to_json())?;
        std::fs::write(Self::table_path(dir, self.mode), self.to_table())
    }
}
