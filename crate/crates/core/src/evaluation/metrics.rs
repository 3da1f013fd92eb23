use std::collections::{BTreeMap, BTreeSet};
use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

use crate::narrative::{check_anchoring, normalize_whitespace, ChangeKind, ComponentKey, Report, RevisionDiff};
use crate::perception::{InteractionDelta, InteractionKind};
use crate::workspace::{Id, WorkspaceSnapshot};

/// Raw counts behind both metric families.
///
/// Targeted refinement: `n_tpp` correctly refined paragraphs out of `n_pp` refined
/// paragraphs and `n_tp` paragraphs that should have been refined. Semantic fidelity:
/// `n_tps` marker-bearing edited sentences out of `n_s` edited sentences, and `n_rsi`
/// realized interactions out of `n_si` interactions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MetricCounts {
    pub n_tpp: u64,
    pub n_pp: u64,
    pub n_tp: u64,
    pub n_tps: u64,
    pub n_s: u64,
    pub n_rsi: u64,
    pub n_si: u64,
}

impl AddAssign for MetricCounts {
    fn add_assign(&mut self, o: Self) {
        self.n_tpp += o.n_tpp;
        self.n_pp += o.n_pp;
        self.n_tp += o.n_tp;
        self.n_tps += o.n_tps;
        self.n_s += o.n_s;
        self.n_rsi += o.n_rsi;
        self.n_si += o.n_si;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Ratio with an empty denominator counting as perfect.
pub fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

pub fn f1(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

impl Prf {
    pub fn from_counts(hits_p: u64, den_p: u64, hits_r: u64, den_r: u64) -> Self {
        let precision = ratio(hits_p, den_p);
        let recall = ratio(hits_r, den_r);
        Prf {
            precision,
            recall,
            f1: f1(precision, recall),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricResult {
    pub targeted: Prf,
    pub fidelity: Prf,
}

impl MetricCounts {
    pub fn result(&self) -> MetricResult {
        MetricResult {
            targeted: Prf::from_counts(self.n_tpp, self.n_pp, self.n_tpp, self.n_tp),
            fidelity: Prf::from_counts(self.n_tps, self.n_s, self.n_rsi, self.n_si),
        }
    }

    pub fn check(&self) -> bool {
        self.n_tpp <= self.n_pp && self.n_tpp <= self.n_tp && self.n_tps <= self.n_s && self.n_rsi <= self.n_si
    }
}

/// `(n_tpp, n_pp, n_tp)` from the changed body paragraphs and the target anchors.
pub fn targeted_refinement_counts(diff: &RevisionDiff, targets: &BTreeSet<Id>) -> (u64, u64, u64) {
    let changed: BTreeSet<&Id> = diff.changed_anchors.iter().filter_map(ComponentKey::anchor).collect();
    let n_tpp = changed.iter().filter(|a| targets.contains(*a)).count() as u64;
    (n_tpp, changed.len() as u64, targets.len() as u64)
}

/// Case-insensitive containment after whitespace normalization.
pub fn marker_matches(text: &str, marker: &str) -> bool {
    let m = normalize_whitespace(marker).to_lowercase();
    !m.is_empty() && normalize_whitespace(text).to_lowercase().contains(&m)
}

/// `(n_tps, n_s, n_rsi, n_si)`.
///
/// Edited sentences are inserted or modified changes, headings included. An interaction
/// with markers is realized when one of them occurs in an edited sentence or in a deleted
/// one. Markerless interactions are judged structurally: a removed frame's paragraph must
/// be gone, an added frame's paragraph present, and anything else needs the new report
/// to be correctly anchored to `curr`.
pub fn semantic_fidelity_counts(
    new_report: &Report,
    diff: &RevisionDiff,
    delta: &InteractionDelta,
    markers: &BTreeMap<u32, Vec<String>>,
    curr: &WorkspaceSnapshot,
) -> (u64, u64, u64, u64) {
    let all_markers: Vec<&String> = markers.values().flatten().collect();
    let edited: Vec<&str> = diff
        .changes
        .iter()
        .filter(|c| matches!(c.change, ChangeKind::Inserted | ChangeKind::Modified))
        .filter_map(|c| c.after.as_deref())
        .collect();
    let n_s = edited.len() as u64;
    let n_tps = edited
        .iter()
        .filter(|s| all_markers.iter().any(|m| marker_matches(s, m)))
        .count() as u64;

    let pool: Vec<&str> = diff
        .changes
        .iter()
        .filter_map(|c| match c.change {
            ChangeKind::Inserted | ChangeKind::Modified => c.after.as_deref(),
            ChangeKind::Deleted => c.before.as_deref(),
        })
        .collect();
    let anchored = check_anchoring(new_report, curr).is_empty();
    let mut n_rsi = 0;
    for i in &delta.interactions {
        let ms = markers.get(&i.order).map(Vec::as_slice).unwrap_or(&[]);
        let realized = if ms.is_empty() {
            let present = new_report.component(&ComponentKey::Body(i.subject.clone())).is_some();
            match i.kind {
                InteractionKind::FrameRemoved => !present,
                InteractionKind::FrameAdded if curr.frame(&i.subject).is_some_and(|f| f.parent.is_none()) => present,
                _ => anchored,
            }
        } else {
            ms.iter().any(|m| pool.iter().any(|s| marker_matches(s, m)))
        };
        n_rsi += realized as u64;
    }
    (n_tps, n_s, n_rsi, delta.interactions.len() as u64)
}
