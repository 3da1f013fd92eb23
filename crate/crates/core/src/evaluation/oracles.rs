//! Toy inputs for both metric families with hand-computed expected values.
//! Shared by the unit tests and the acceptance suite.

use std::collections::{BTreeMap, BTreeSet};

use crate::narrative::{diff_reports, Report, ReportComponent};
use crate::perception::perceive;
use crate::workspace::builders::{add_highlight, doc, empty_snapshot, frame, note, remove_highlight};
use crate::workspace::{ComponentKind, Id, Polarity, WorkspaceSnapshot};

use super::metrics::{semantic_fidelity_counts, targeted_refinement_counts, MetricCounts, Prf};

pub struct Oracle {
    pub name: &'static str,
    pub expected: (f64, f64, f64),
    pub actual: Prf,
}

impl Oracle {
    pub fn holds(&self) -> bool {
        let (p, r, f) = self.expected;
        (self.actual.precision - p).abs() < 1e-9
            && (self.actual.recall - r).abs() < 1e-9
            && (self.actual.f1 - f).abs() < 1e-9
    }
}

fn body(anchor: &str, heading: &str, sentences: &[&str]) -> ReportComponent {
    ReportComponent::new(
        ComponentKind::Body,
        Some(Id::from(anchor)),
        heading,
        sentences.iter().map(|s| s.to_string()).collect(),
    )
}

fn summary() -> ReportComponent {
    ReportComponent::new(ComponentKind::Summary, None, "Bottom Line", vec!["Overview.".into()])
}

fn abc(a: &str, b: &str, c: &str) -> Report {
    Report::new(
        1,
        vec![
            summary(),
            body("A", "Alpha", &[a]),
            body("B", "Beta", &[b]),
            body("C", "Gamma", &[c]),
        ],
    )
}

fn ids(xs: &[&str]) -> BTreeSet<Id> {
    xs.iter().map(|x| Id::from(*x)).collect()
}

fn targeted(old: &Report, new: &Report, targets: &[&str]) -> MetricCounts {
    let (n_tpp, n_pp, n_tp) = targeted_refinement_counts(&diff_reports(old, new), &ids(targets));
    MetricCounts {
        n_tpp,
        n_pp,
        n_tp,
        ..Default::default()
    }
}

const A0: &str = "Alpha holds the intercepts.";
const B0: &str = "Beta covers the money trail.";
const C0: &str = "Gamma tracks the trips abroad.";
const A1: &str = "Completely different words here now.";
const B1: &str = "Nothing from before survives this rewrite.";
const C1: &str = "Every token was replaced wholesale today.";

fn two_frames() -> WorkspaceSnapshot {
    let mut s = empty_snapshot(1);
    s.frames = vec![
        frame("A", "Alpha", (0.0, 0.0), (200.0, 200.0), None, 1),
        frame("B", "Beta", (400.0, 0.0), (200.0, 200.0), None, 2),
    ];
    s.documents = vec![doc("d1", "Port log", "Ships left the harbor at dawn.", (0.0, 0.0))];
    s
}

fn fidelity(
    prev: &WorkspaceSnapshot,
    curr: &WorkspaceSnapshot,
    old: &Report,
    new: &Report,
    markers: &[(u32, &[&str])],
) -> MetricCounts {
    let delta = perceive(prev, curr).expect("oracle workspaces are valid");
    let markers: BTreeMap<u32, Vec<String>> = markers
        .iter()
        .map(|(o, ms)| (*o, ms.iter().map(|m| m.to_string()).collect()))
        .collect();
    let (n_tps, n_s, n_rsi, n_si) = semantic_fidelity_counts(new, &diff_reports(old, new), &delta, &markers, curr);
    MetricCounts {
        n_tps,
        n_s,
        n_rsi,
        n_si,
        ..Default::default()
    }
}

fn ab_report(a: &[&str], b: &[&str]) -> Report {
    Report::new(1, vec![summary(), body("A", "Alpha", a), body("B", "Beta", b)])
}

pub fn metric_oracles() -> Vec<Oracle> {
    let base = abc(A0, B0, C0);
    let mut out = Vec::new();
    let mut push = |name, expected, actual| out.push(Oracle { name, expected, actual });

    push(
        "targeted: half of the edits on target",
        (0.5, 0.5, 0.5),
        targeted(&base, &abc(A1, B1, C0), &["B", "C"]).result().targeted,
    );
    push(
        "targeted: one of four targets edited",
        (1.0, 0.25, 0.4),
        targeted(&base, &abc(A1, B0, C0), &["A", "B", "C", "D"]).result().targeted,
    );
    push(
        "targeted: no edits and no targets",
        (1.0, 1.0, 1.0),
        targeted(&base, &base, &[]).result().targeted,
    );
    push(
        "targeted: edits without targets",
        (0.0, 1.0, 0.0),
        targeted(&base, &abc(A1, B1, C1), &[]).result().targeted,
    );
    push(
        "targeted: targets without edits",
        (1.0, 0.0, 0.0),
        targeted(&base, &base, &["A"]).result().targeted,
    );
    let mut micro = targeted(&base, &abc(A1, B0, C0), &["A"]);
    micro += targeted(&base, &abc(A1, B1, C1), &[]);
    push("targeted: micro-averaged over two cases", (0.25, 1.0, 0.4), micro.result().targeted);

    // NoteAdded (order 0) and HighlightAdded (order 1); only the note lands.
    let prev = two_frames();
    let mut curr = prev.clone();
    curr.version = 2;
    curr.notes.push(note("n1", "budget limits", (50.0, 50.0)));
    add_highlight(&mut curr, "h1", "d1", "harbor", 1, Polarity::Emphasize);
    let old = ab_report(&[A0], &[B0]);
    let new = ab_report(
        &[A0, "Budget limits constrain the trips.", "Nothing else is known.", "Funds were moved twice."],
        &[B0],
    );
    let f = fidelity(&prev, &curr, &old, &new, &[(0, &["budget limits"]), (1, &["harbor"])]);
    push("fidelity: partial marker coverage", (1.0 / 3.0, 0.5, 0.4), f.result().fidelity);

    // A deleted sentence still realizes the interaction.
    let mut with_h = prev.clone();
    add_highlight(&mut with_h, "h1", "d1", "harbor", 1, Polarity::Emphasize);
    let mut without = with_h.clone();
    without.version = 2;
    remove_highlight(&mut without, "h1");
    let old = ab_report(&[A0, "The harbor matters."], &[B0]);
    let new = ab_report(&[A0], &[B0]);
    let f = fidelity(&with_h, &without, &old, &new, &[(0, &["harbor"])]);
    push("fidelity: realized through a deletion", (1.0, 1.0, 1.0), f.result().fidelity);

    // Matching ignores case and whitespace runs.
    let mut noted = prev.clone();
    noted.version = 2;
    noted.notes.push(note("n1", "budget limits", (50.0, 50.0)));
    let old = ab_report(&[A0], &[B0]);
    let new = ab_report(&[A0, "BUDGET\n  Limits apply."], &[B0]);
    let f = fidelity(&prev, &noted, &old, &new, &[(0, &["budget limits"])]);
    push("fidelity: case and whitespace insensitive", (1.0, 1.0, 1.0), f.result().fidelity);

    // Headings count as edited sentences.
    let mut renamed = prev.clone();
    renamed.version = 2;
    renamed.frames[0].name = "Alpha Team".into();
    let old = ab_report(&[A0], &[B0]);
    let mut new = ab_report(&[A0, "An unrelated aside."], &[B0]);
    new.components[1].heading = "Alpha Team".into();
    let f = fidelity(&prev, &renamed, &old, &new, &[(0, &["Alpha Team"])]);
    push("fidelity: heading edits count", (0.5, 1.0, 2.0 / 3.0), f.result().fidelity);

    // A markerless frame removal is realized only when its paragraph is gone.
    let mut dropped = prev.clone();
    dropped.version = 2;
    dropped.frames.retain(|f| f.id.as_str() != "B");
    let old = ab_report(&[A0], &[B0]);
    let f = fidelity(&prev, &dropped, &old, &old, &[(0, &[])]);
    push("fidelity: removed frame still has a paragraph", (1.0, 0.0, 0.0), f.result().fidelity);

    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_oracles_hold() {
        let os = metric_oracles();
        assert!(os.len() >= 10);
        for o in &os {
            assert!(o.holds(), "{}: expected {:?}, got {:?}", o.name, o.expected, o.actual);
        }
    }
}
