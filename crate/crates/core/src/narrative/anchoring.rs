use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::context::GenerationContext;
use super::report::{ComponentKey, LayoutSlot, Report, UNASSIGNED_ANCHOR};
use crate::workspace::{main_frames, resolve_membership, ComponentKind, Id, WorkspaceSnapshot};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum AnchoringViolation {
    MissingParagraph { anchor: Id },
    DanglingAnchor { anchor: Id },
    DuplicateAnchor { anchor: Id },
    BodyWithoutAnchor { index: usize },
    AnchorOnNonBody { index: usize },
    MissingSummary,
    DuplicateComponent { kind: ComponentKind },
    EmptyComponent { index: usize },
    OutOfOrder { expected: Vec<ComponentKey>, found: Vec<ComponentKey> },
}

impl fmt::Display for AnchoringViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnchoringViolation::MissingParagraph { anchor } => write!(f, "missing paragraph for {anchor}"),
            AnchoringViolation::DanglingAnchor { anchor } => write!(f, "dangling anchor {anchor}"),
            AnchoringViolation::DuplicateAnchor { anchor } => write!(f, "duplicate anchor {anchor}"),
            AnchoringViolation::BodyWithoutAnchor { index } => {
                write!(f, "body component {index} has no anchor")
            }
            AnchoringViolation::AnchorOnNonBody { index } => {
                write!(f, "component {index} is not a body paragraph but has an anchor")
            }
            AnchoringViolation::MissingSummary => write!(f, "missing summary component"),
            AnchoringViolation::DuplicateComponent { kind } => write!(f, "duplicate {kind} component"),
            AnchoringViolation::EmptyComponent { index } => write!(f, "component {index} has no sentences"),
            AnchoringViolation::OutOfOrder { expected, found } => {
                let show = |v: &[ComponentKey]| v.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(", ");
                write!(f, "components out of order: expected [{}], found [{}]", show(expected), show(found))
            }
        }
    }
}

/// One-to-one check between body paragraphs and main frames.
///
/// `expect_unassigned` says whether the synthetic Unassigned paragraph is required; it is
/// only ever allowed when there are no main frames.
pub fn check_anchoring_ids(report: &Report, mains: &[Id], expect_unassigned: bool) -> Vec<AnchoringViolation> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    let mut summaries = 0;
    let mut conclusions = 0;
    let unassigned = Id::from(UNASSIGNED_ANCHOR);
    let unassigned_allowed = mains.is_empty() && expect_unassigned;

    for (index, c) in report.components.iter().enumerate() {
        match c.kind {
            ComponentKind::Summary => summaries += 1,
            ComponentKind::Conclusion => conclusions += 1,
            ComponentKind::Body => {}
        }
        match (&c.kind, &c.anchor) {
            (ComponentKind::Body, None) => out.push(AnchoringViolation::BodyWithoutAnchor { index }),
            (ComponentKind::Body, Some(a)) => {
                if !seen.insert(a.clone()) {
                    out.push(AnchoringViolation::DuplicateAnchor { anchor: a.clone() });
                } else if !(mains.contains(a) || (a == &unassigned && unassigned_allowed)) {
                    out.push(AnchoringViolation::DanglingAnchor { anchor: a.clone() });
                }
            }
            (_, Some(_)) => out.push(AnchoringViolation::AnchorOnNonBody { index }),
            (_, None) => {}
        }
    }
    for m in mains {
        if !seen.contains(m) {
            out.push(AnchoringViolation::MissingParagraph { anchor: m.clone() });
        }
    }
    if unassigned_allowed && !seen.contains(&unassigned) {
        out.push(AnchoringViolation::MissingParagraph { anchor: unassigned });
    }
    if summaries == 0 {
        out.push(AnchoringViolation::MissingSummary);
    }
    if summaries > 1 {
        out.push(AnchoringViolation::DuplicateComponent {
            kind: ComponentKind::Summary,
        });
    }
    if conclusions > 1 {
        out.push(AnchoringViolation::DuplicateComponent {
            kind: ComponentKind::Conclusion,
        });
    }
    out
}

/// Anchoring violations of `report` against the workspace it describes.
pub fn check_anchoring(report: &Report, snapshot: &WorkspaceSnapshot) -> Vec<AnchoringViolation> {
    let mains: Vec<Id> = main_frames(snapshot).iter().map(|f| f.id.clone()).collect();
    let has_unassigned = resolve_membership(snapshot).values().any(Option::is_none);
    check_anchoring_ids(report, &mains, has_unassigned)
}

pub fn check_anchoring_context(report: &Report, context: &GenerationContext) -> Vec<AnchoringViolation> {
    let mains: Vec<Id> = context.frames.iter().map(|f| f.id.clone()).collect();
    check_anchoring_ids(report, &mains, context.has_unassigned_content())
}

/// Anchoring plus exact layout order and non-empty paragraphs.
pub fn check_layout(report: &Report, layout: &[LayoutSlot], context: &GenerationContext) -> Vec<AnchoringViolation> {
    let mut out = check_anchoring_context(report, context);
    for (index, c) in report.components.iter().enumerate() {
        if c.sentences.is_empty() {
            out.push(AnchoringViolation::EmptyComponent { index });
        }
    }
    let expected: Vec<ComponentKey> = layout.iter().map(|s| s.key.clone()).collect();
    let found = report.keys();
    if out.is_empty() && expected != found {
        out.push(AnchoringViolation::OutOfOrder { expected, found });
    }
    out
}
