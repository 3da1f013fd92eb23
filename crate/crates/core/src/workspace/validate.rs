use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::model::*;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum ViolationKind {
    DuplicateId,
    ReservedId,
    NonPositiveSize,
    DanglingParent { parent: Id },
    FrameCycle,
    ChildOutsideParent { parent: Id },
    DanglingDocument { document: Id },
    DanglingHighlight { highlight: Id },
    HighlightNotListed { document: Id },
    HighlightDocumentMismatch { document: Id },
    SpanStartNotBeforeEnd,
    SpanOutOfRange { length: usize },
    HighlightTextMismatch,
    ZeroCount,
    EmptyNote,
    PromptComponents { detail: String },
    ModelConfig { detail: String },
    UnsupportedSchema { found: u32 },
}

/// One invariant breach, tagged with the offending entity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub subject: Id,
    #[serde(flatten)]
    pub kind: ViolationKind,
}

impl Violation {
    fn new(subject: &Id, kind: ViolationKind) -> Self {
        Violation {
            subject: subject.clone(),
            kind,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = &self.subject;
        match &self.kind {
            ViolationKind::DuplicateId => write!(f, "{s}: duplicate id"),
            ViolationKind::ReservedId => write!(f, "{s}: reserved id"),
            ViolationKind::NonPositiveSize => write!(f, "{s}: size must be positive"),
            ViolationKind::DanglingParent { parent } => write!(f, "{s}: dangling parent {parent}"),
            ViolationKind::FrameCycle => write!(f, "{s}: frame cycle"),
            ViolationKind::ChildOutsideParent { parent } => {
                write!(f, "{s}: bounds not inside parent {parent}")
            }
            ViolationKind::DanglingDocument { document } => {
                write!(f, "{s}: dangling document {document}")
            }
            ViolationKind::DanglingHighlight { highlight } => {
                write!(f, "{s}: dangling highlight {highlight}")
            }
            ViolationKind::HighlightNotListed { document } => {
                write!(f, "{s}: not listed on document {document}")
            }
            ViolationKind::HighlightDocumentMismatch { document } => {
                write!(f, "{s}: listed on {document} but belongs elsewhere")
            }
            ViolationKind::SpanStartNotBeforeEnd => write!(f, "{s}: span start ≥ end"),
            ViolationKind::SpanOutOfRange { length } => {
                write!(f, "{s}: span exceeds body length {length}")
            }
            ViolationKind::HighlightTextMismatch => write!(f, "{s}: text differs from body span"),
            ViolationKind::ZeroCount => write!(f, "{s}: count < 1"),
            ViolationKind::EmptyNote => write!(f, "{s}: note text is empty"),
            ViolationKind::PromptComponents { detail } => write!(f, "{s}: {detail}"),
            ViolationKind::ModelConfig { detail } => write!(f, "{s}: {detail}"),
            ViolationKind::UnsupportedSchema { found } => {
                write!(f, "{s}: unsupported snapshot_schema {found}")
            }
        }
    }
}

/// Every invariant breach in `snapshot`. An empty list means the snapshot is valid.
pub fn validate(snapshot: &WorkspaceSnapshot) -> Vec<Violation> {
    let mut out = Vec::new();
    let root = Id::from("snapshot");
    if snapshot.snapshot_schema != SNAPSHOT_SCHEMA {
        out.push(Violation::new(
            &root,
            ViolationKind::UnsupportedSchema {
                found: snapshot.snapshot_schema,
            },
        ));
    }

    let mut seen = HashSet::new();
    let all_ids = snapshot
        .frames
        .iter()
        .map(|f| &f.id)
        .chain(snapshot.documents.iter().map(|d| &d.id))
        .chain(snapshot.highlights.iter().map(|h| &h.id))
        .chain(snapshot.notes.iter().map(|n| &n.id));
    for id in all_ids {
        if !seen.insert(id) {
            out.push(Violation::new(id, ViolationKind::DuplicateId));
        }
        if RESERVED_IDS.contains(&id.as_str()) {
            out.push(Violation::new(id, ViolationKind::ReservedId));
        }
    }

    let sizes = snapshot
        .frames
        .iter()
        .map(|f| (&f.id, f.size))
        .chain(snapshot.documents.iter().map(|d| (&d.id, d.size)))
        .chain(snapshot.notes.iter().map(|n| (&n.id, n.size)));
    for (id, size) in sizes {
        if !(size.0 > 0.0 && size.1 > 0.0) {
            out.push(Violation::new(id, ViolationKind::NonPositiveSize));
        }
    }

    check_frames(snapshot, &mut out);
    check_highlights(snapshot, &mut out);

    for n in &snapshot.notes {
        if n.text.trim().is_empty() {
            out.push(Violation::new(&n.id, ViolationKind::EmptyNote));
        }
    }

    check_settings(&snapshot.prompt_settings, &mut out);
    out
}

fn check_frames(snapshot: &WorkspaceSnapshot, out: &mut Vec<Violation>) {
    let by_id: HashMap<&Id, &Frame> = snapshot.frames.iter().map(|f| (&f.id, f)).collect();
    for f in &snapshot.frames {
        let Some(parent) = &f.parent else { continue };
        match by_id.get(parent) {
            None => out.push(Violation::new(
                &f.id,
                ViolationKind::DanglingParent {
                    parent: parent.clone(),
                },
            )),
            Some(p) => {
                if !p.bounds().contains(&f.bounds()) {
                    out.push(Violation::new(
                        &f.id,
                        ViolationKind::ChildOutsideParent {
                            parent: parent.clone(),
                        },
                    ));
                }
            }
        }
    }
    // A frame is on a cycle when walking its parents returns to itself.
    for f in &snapshot.frames {
        let mut current = f.parent.as_ref();
        let mut steps = 0;
        while let Some(p) = current {
            if p == &f.id {
                out.push(Violation::new(&f.id, ViolationKind::FrameCycle));
                break;
            }
            steps += 1;
            if steps > snapshot.frames.len() {
                break;
            }
            current = by_id.get(p).and_then(|pf| pf.parent.as_ref());
        }
    }
}

fn check_highlights(snapshot: &WorkspaceSnapshot, out: &mut Vec<Violation>) {
    let docs: HashMap<&Id, &DocumentCard> =
        snapshot.documents.iter().map(|d| (&d.id, d)).collect();
    let highlights: HashMap<&Id, &Highlight> =
        snapshot.highlights.iter().map(|h| (&h.id, h)).collect();

    for h in &snapshot.highlights {
        if h.count < 1 {
            out.push(Violation::new(&h.id, ViolationKind::ZeroCount));
        }
        let (start, end) = h.span;
        if start >= end {
            out.push(Violation::new(&h.id, ViolationKind::SpanStartNotBeforeEnd));
        }
        let Some(d) = docs.get(&h.document) else {
            out.push(Violation::new(
                &h.id,
                ViolationKind::DanglingDocument {
                    document: h.document.clone(),
                },
            ));
            continue;
        };
        if !d.highlights.contains(&h.id) {
            out.push(Violation::new(
                &h.id,
                ViolationKind::HighlightNotListed {
                    document: d.id.clone(),
                },
            ));
        }
        if start < end {
            let length = d.body.chars().count();
            match char_slice(&d.body, start, end) {
                None => out.push(Violation::new(&h.id, ViolationKind::SpanOutOfRange { length })),
                Some(text) if text != h.text => {
                    out.push(Violation::new(&h.id, ViolationKind::HighlightTextMismatch))
                }
                Some(_) => {}
            }
        }
    }

    for d in &snapshot.documents {
        for hid in &d.highlights {
            match highlights.get(hid) {
                None => out.push(Violation::new(
                    &d.id,
                    ViolationKind::DanglingHighlight {
                        highlight: hid.clone(),
                    },
                )),
                Some(h) if h.document != d.id => out.push(Violation::new(
                    hid,
                    ViolationKind::HighlightDocumentMismatch {
                        document: d.id.clone(),
                    },
                )),
                Some(_) => {}
            }
        }
    }
}

fn check_settings(settings: &PromptSettings, out: &mut Vec<Violation>) {
    let subject = Id::from("prompt_settings");
    let count = |kind| settings.components.iter().filter(|c| c.kind == kind).count();
    let mut problems = Vec::new();
    if count(ComponentKind::Summary) != 1 {
        problems.push("exactly one summary component required".to_owned());
    }
    if count(ComponentKind::Body) != 1 {
        problems.push("exactly one body slot required".to_owned());
    }
    if count(ComponentKind::Conclusion) > 1 {
        problems.push("at most one conclusion component allowed".to_owned());
    }
    let names: BTreeSet<&str> = settings.components.iter().map(|c| c.name.as_str()).collect();
    if names.len() != settings.components.len() {
        problems.push("component names must be distinct".to_owned());
    }
    for detail in problems {
        out.push(Violation::new(&subject, ViolationKind::PromptComponents { detail }));
    }
    let mc = &settings.model_config;
    if !(0.0..=2.0).contains(&mc.temperature) {
        out.push(Violation::new(
            &subject,
            ViolationKind::ModelConfig {
                detail: format!("temperature {} outside [0, 2]", mc.temperature),
            },
        ));
    }
    if mc.max_tokens == 0 {
        out.push(Violation::new(
            &subject,
            ViolationKind::ModelConfig {
                detail: "max_tokens must be positive".to_owned(),
            },
        ));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workspace::builders::*;

    fn well_formed() -> WorkspaceSnapshot {
        let mut s = empty_snapshot(1);
        s.frames.push(frame("F", "Suspects", (0.0, 0.0), (100.0, 100.0), None, 1));
        s.frames.push(frame("G", "Inner", (0.0, 0.0), (40.0, 40.0), Some("F"), 2));
        s.documents.push(doc("D", "Memo", "Hamid met Ali in Queens.", (5.0, 5.0)));
        add_highlight(&mut s, "H", "D", "Hamid", 2, Polarity::Emphasize);
        s.notes.push(note("N", "check the dates", (30.0, 30.0)));
        s
    }

    #[test]
    fn well_formed_is_valid() {
        assert_eq!(validate(&well_formed()), vec![]);
    }

    #[test]
    fn inverted_span() {
        let mut s = well_formed();
        s.highlights[0].span = (5, 3);
        let v = validate(&s);
        assert!(v.iter().any(|v| v.to_string() == "H: span start ≥ end"), "{v:?}");
    }

    #[test]
    fn self_parent_is_cycle() {
        let mut s = well_formed();
        s.frames[0].parent = Some(Id::from("F"));
        let v = validate(&s);
        assert!(v.iter().any(|v| v.kind == ViolationKind::FrameCycle), "{v:?}");
        assert!(v.iter().any(|v| v.to_string().contains("frame cycle")));
    }

    #[test]
    fn two_frame_cycle() {
        let mut s = well_formed();
        s.frames[0].parent = Some(Id::from("G"));
        let cycles = validate(&s)
            .into_iter()
            .filter(|v| v.kind == ViolationKind::FrameCycle)
            .count();
        assert_eq!(cycles, 2);
    }

    #[test]
    fn dangling_and_count() {
        let mut s = well_formed();
        s.highlights[0].count = 0;
        s.highlights[0].document = Id::from("nope");
        s.frames[1].parent = Some(Id::from("ghost"));
        let kinds: Vec<_> = validate(&s).into_iter().map(|v| v.kind).collect();
        assert!(kinds.contains(&ViolationKind::ZeroCount));
        assert!(kinds.contains(&ViolationKind::DanglingDocument {
            document: Id::from("nope")
        }));
        assert!(kinds.contains(&ViolationKind::DanglingParent {
            parent: Id::from("ghost")
        }));
    }

    #[test]
    fn span_out_of_range_and_text_mismatch() {
        let mut s = well_formed();
        s.highlights[0].span = (0, 400);
        assert!(validate(&s)
            .iter()
            .any(|v| matches!(v.kind, ViolationKind::SpanOutOfRange { .. })));
        let mut s = well_formed();
        s.highlights[0].text = "Hamed".into();
        assert!(validate(&s)
            .iter()
            .any(|v| v.kind == ViolationKind::HighlightTextMismatch));
    }

    #[test]
    fn duplicate_reserved_and_empty_note() {
        let mut s = well_formed();
        s.notes.push(note("D", "  ", (0.0, 0.0)));
        s.notes.push(note("summary", "x", (0.0, 0.0)));
        let kinds: Vec<_> = validate(&s).into_iter().map(|v| v.kind).collect();
        assert!(kinds.contains(&ViolationKind::DuplicateId));
        assert!(kinds.contains(&ViolationKind::EmptyNote));
        assert!(kinds.contains(&ViolationKind::ReservedId));
    }

    #[test]
    fn child_outside_parent() {
        let mut s = well_formed();
        s.frames[1].position = Point(90.0, 0.0);
        assert!(validate(&s)
            .iter()
            .any(|v| matches!(v.kind, ViolationKind::ChildOutsideParent { .. })));
    }

    #[test]
    fn settings_rules() {
        let mut s = well_formed();
        s.prompt_settings.components.push(ComponentSpec::new("Extra", ComponentKind::Summary));
        s.prompt_settings.model_config.temperature = 3.0;
        s.prompt_settings.model_config.max_tokens = 0;
        assert_eq!(validate(&s).len(), 3);
    }
}
