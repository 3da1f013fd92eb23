//! The synthetic evaluation suite: one small intelligence-analysis workspace and a set
//! of curated edits to it, each with hand-listed target paragraphs and markers.
//!
//! Base reports come from the mock backend, so the committed JSON must be rebuilt
//! (`eval build-suite`) whenever the mock generation templates change.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Arc;

use crate::agents::{Agents, MockBackend};
use crate::narrative::serialize_context;
use crate::perception::{perceive, InteractionKind};
use crate::workspace::builders::{add_highlight, doc, fixed_time, frame, note, remove_highlight};
use crate::workspace::{
    ComponentKind, ComponentSpec, DocumentCard, Frame, Highlight, Id, ModelConfig, Note, Point, Polarity, PromptSettings,
    WorkspaceSnapshot,
};

use super::case::{EvaluationCase, CASE_SCHEMA};

use InteractionKind::*;

/// The shared starting workspace.
pub fn base_workspace() -> WorkspaceSnapshot {
    let mut s = WorkspaceSnapshot::new(1, fixed_time(1), PromptSettings::bluf(
        "Summarize what the evidence says about the Haddad network for a briefing.",
    ));
    s.frames = vec![
        frame("suspects", "Suspects", (0.0, 0.0), (300.0, 300.0), None, 1),
        frame("meetings", "Meetings", (60.0, 60.0), (100.0, 100.0), Some("suspects"), 2),
        frame("funding", "Funding", (500.0, 0.0), (300.0, 300.0), None, 3),
        frame("travel", "Travel", (1000.0, 0.0), (300.0, 300.0), None, 4),
    ];
    s.documents = vec![
        doc(
            "d_call",
            "Intercept 14",
            "Hamid Rahimi called a courier in Queens, NYC on 3 March. The call lasted four minutes.",
            (-60.0, -60.0),
        ),
        doc(
            "d_cafe",
            "Surveillance log 7",
            "Hamid met Omar Haddad at a cafe near the harbor. Both left separately.",
            (60.0, 60.0),
        ),
        doc(
            "d_wire",
            "Bank notice 22",
            "A wire transfer of 9,500 dollars reached the Haddad Trading account.",
            (500.0, 0.0),
        ),
        doc(
            "d_ledger",
            "Ledger extract",
            "The ledger lists three cash deposits below the reporting limit.",
            (560.0, 60.0),
        ),
        doc(
            "d_visa",
            "Visa record",
            "A business visa for Omar Haddad was issued in Istanbul in February.",
            (1000.0, 0.0),
        ),
        doc(
            "d_ticket",
            "Ticket receipt",
            "A one-way ticket from Istanbul to Newark was bought with cash.",
            (1060.0, 60.0),
        ),
        doc(
            "d_tip",
            "Tip line memo",
            "An anonymous caller reported a storage unit rented under a false name.",
            (1500.0, 0.0),
        ),
    ];
    add_highlight(&mut s, "h_hamid", "d_call", "Hamid Rahimi", 2, Polarity::Emphasize);
    add_highlight(&mut s, "h_wire", "d_wire", "9,500 dollars", 1, Polarity::Emphasize);
    add_highlight(&mut s, "h_visa", "d_visa", "Istanbul", 1, Polarity::Emphasize);
    add_highlight(&mut s, "h_harbor", "d_cafe", "near the harbor", 1, Polarity::Reject);
    s.notes = vec![
        note("n_budget", "check who paid for the tickets", (960.0, -60.0)),
        note("n_cash", "cash deposits look structured", (440.0, -60.0)),
    ];
    s
}

type Markers<'a> = &'a [(InteractionKind, &'a str, &'a [&'a str])];

struct Draft<'a> {
    id: &'a str,
    description: &'a str,
    edit: fn(&mut WorkspaceSnapshot),
    targets: &'a [&'a str],
    markers: Markers<'a>,
}

fn frame_mut<'a>(s: &'a mut WorkspaceSnapshot, id: &str) -> &'a mut Frame {
    s.frames.iter_mut().find(|f| f.id.as_str() == id).unwrap()
}

fn doc_mut<'a>(s: &'a mut WorkspaceSnapshot, id: &str) -> &'a mut DocumentCard {
    s.documents.iter_mut().find(|d| d.id.as_str() == id).unwrap()
}

fn note_mut<'a>(s: &'a mut WorkspaceSnapshot, id: &str) -> &'a mut Note {
    s.notes.iter_mut().find(|n| n.id.as_str() == id).unwrap()
}

fn highlight_mut<'a>(s: &'a mut WorkspaceSnapshot, id: &str) -> &'a mut Highlight {
    s.highlights.iter_mut().find(|h| h.id.as_str() == id).unwrap()
}

const DRAFTS: &[Draft<'static>] = &[
    Draft {
        id: "note_added",
        description: "A note about budget limits is dropped into Travel.",
        edit: |s| s.notes.push(note("n_new", "mention budget limits", (1040.0, -80.0))),
        targets: &["travel"],
        markers: &[(NoteAdded, "n_new", &["budget limits"])],
    },
    Draft {
        id: "note_removed",
        description: "The structuring note in Funding is deleted.",
        edit: |s| s.notes.retain(|n| n.id.as_str() != "n_cash"),
        targets: &["funding"],
        markers: &[(NoteRemoved, "n_cash", &["cash deposits look structured"])],
    },
    Draft {
        id: "note_edited",
        description: "The Travel note is rewritten.",
        edit: |s| note_mut(s, "n_budget").text = "confirm the tickets were paid in cash".into(),
        targets: &["travel"],
        markers: &[(NoteEdited, "n_budget", &["paid in cash"])],
    },
    Draft {
        id: "note_reassigned",
        description: "The structuring note is dragged from Funding to Travel.",
        edit: |s| note_mut(s, "n_cash").position = Point(1040.0, 100.0),
        targets: &["funding", "travel"],
        markers: &[(NoteReassigned, "n_cash", &["cash deposits look structured"])],
    },
    Draft {
        id: "highlight_added",
        description: "The analyst highlights the call location.",
        edit: |s| add_highlight(s, "h_queens", "d_call", "Queens, NYC", 1, Polarity::Emphasize),
        targets: &["suspects"],
        markers: &[(HighlightAdded, "h_queens", &["Queens, NYC"])],
    },
    Draft {
        id: "highlight_removed",
        description: "The transfer amount highlight is cleared.",
        edit: |s| remove_highlight(s, "h_wire"),
        targets: &["funding"],
        markers: &[(HighlightRemoved, "h_wire", &["9,500 dollars"])],
    },
    Draft {
        id: "highlight_count_up",
        description: "Istanbul is highlighted twice more in other sources.",
        edit: |s| highlight_mut(s, "h_visa").count = 3,
        targets: &["travel"],
        markers: &[(HighlightCountEdited, "h_visa", &["Istanbul"])],
    },
    Draft {
        id: "highlight_polarity",
        description: "The rejected harbor highlight becomes relevant.",
        edit: |s| highlight_mut(s, "h_harbor").polarity = Polarity::Emphasize,
        targets: &["suspects"],
        markers: &[(HighlightPolarityToggled, "h_harbor", &["near the harbor"])],
    },
    Draft {
        id: "frame_added",
        description: "A Logistics frame is drawn around the loose tip memo.",
        edit: |s| s.frames.push(frame("logistics", "Logistics", (1500.0, 0.0), (300.0, 300.0), None, 5)),
        targets: &["logistics"],
        markers: &[
            (FrameAdded, "logistics", &["Logistics"]),
            (DocumentReassigned, "d_tip", &["Tip line memo"]),
        ],
    },
    Draft {
        id: "frame_removed",
        description: "The Funding frame is deleted and its material falls out of every frame.",
        edit: |s| s.frames.retain(|f| f.id.as_str() != "funding"),
        targets: &["funding"],
        markers: &[
            (FrameRemoved, "funding", &[]),
            (DocumentReassigned, "d_wire", &["Bank notice 22"]),
            (DocumentReassigned, "d_ledger", &["Ledger extract"]),
            (NoteReassigned, "n_cash", &["cash deposits look structured"]),
        ],
    },
    Draft {
        id: "frame_renamed",
        description: "Travel is renamed to cover visas.",
        edit: |s| frame_mut(s, "travel").name = "Travel and Visas".into(),
        targets: &["travel"],
        markers: &[(FrameRenamed, "travel", &["Travel and Visas"])],
    },
    Draft {
        id: "frame_reparented",
        description: "Meetings is moved under Funding together with its surveillance log.",
        edit: |s| {
            let f = frame_mut(s, "meetings");
            f.position = Point(560.0, -60.0);
            f.parent = Some(Id::from("funding"));
            doc_mut(s, "d_cafe").position = Point(560.0, -60.0);
        },
        targets: &["suspects", "funding"],
        markers: &[
            (FrameReparented, "meetings", &["Meetings"]),
            (FrameMoved, "meetings", &[]),
            (DocumentMoved, "d_cafe", &[]),
        ],
    },
    Draft {
        id: "pure_move",
        description: "The whole Travel cluster is nudged right; nothing should be rewritten.",
        edit: |s| {
            frame_mut(s, "travel").position.0 += 40.0;
            for d in ["d_visa", "d_ticket"] {
                doc_mut(s, d).position.0 += 40.0;
            }
            note_mut(s, "n_budget").position.0 += 40.0;
        },
        targets: &[],
        markers: &[
            (FrameMoved, "travel", &[]),
            (DocumentMoved, "d_visa", &[]),
            (DocumentMoved, "d_ticket", &[]),
            (NoteReassigned, "n_budget", &[]),
        ],
    },
    Draft {
        id: "document_reassigned",
        description: "The ticket receipt is regrouped under Funding.",
        edit: |s| doc_mut(s, "d_ticket").position = Point(620.0, 60.0),
        targets: &["travel", "funding"],
        markers: &[(DocumentReassigned, "d_ticket", &["Ticket receipt"])],
    },
    Draft {
        id: "mixed_reading",
        description: "A note, a new highlight and a lowered count across two frames.",
        edit: |s| {
            s.notes.push(note("n_storage", "ask about the storage unit", (-100.0, 100.0)));
            add_highlight(s, "h_deposits", "d_ledger", "cash deposits", 2, Polarity::Emphasize);
            highlight_mut(s, "h_hamid").count = 1;
        },
        targets: &["suspects", "funding"],
        markers: &[
            (NoteAdded, "n_storage", &["storage unit"]),
            (HighlightAdded, "h_deposits", &["cash deposits"]),
            (HighlightCountEdited, "h_hamid", &["Hamid Rahimi"]),
        ],
    },
    Draft {
        id: "mixed_structure",
        description: "A new empty frame, a renamed frame and a withdrawn note.",
        edit: |s| {
            s.frames.push(frame("logistics", "Logistics", (1500.0, 600.0), (300.0, 300.0), None, 5));
            frame_mut(s, "suspects").name = "Persons of Interest".into();
            s.notes.retain(|n| n.id.as_str() != "n_budget");
        },
        targets: &["logistics", "suspects", "travel"],
        markers: &[
            (FrameAdded, "logistics", &["Logistics"]),
            (FrameRenamed, "suspects", &["Persons of Interest"]),
            (NoteRemoved, "n_budget", &["check who paid for the tickets"]),
        ],
    },
    Draft {
        id: "layout_and_highlight",
        description: "The conclusion is moved up front and a Travel highlight is added.",
        edit: |s| {
            s.prompt_settings.components = vec![
                ComponentSpec::new("Bottom Line", ComponentKind::Summary),
                ComponentSpec::new("Conclusion", ComponentKind::Conclusion),
                ComponentSpec::new("Findings", ComponentKind::Body),
            ];
            add_highlight(s, "h_newark", "d_ticket", "Newark", 1, Polarity::Emphasize);
        },
        targets: &["travel"],
        markers: &[(HighlightAdded, "h_newark", &["Newark"])],
    },
];

fn build(draft: &Draft, base: &WorkspaceSnapshot, agents: &Agents) -> EvaluationCase {
    let base_report = agents
        .generate_initial(&serialize_context(base).expect("base workspace is valid"))
        .expect("mock generation succeeds");
    let mut curr = base.clone();
    curr.version = 2;
    curr.timestamp = fixed_time(2);
    (draft.edit)(&mut curr);
    let delta = perceive(base, &curr).unwrap_or_else(|e| panic!("{}: {e}", draft.id));

    let mut markers = BTreeMap::new();
    for (kind, subject, ms) in draft.markers {
        let i = delta
            .interactions
            .iter()
            .find(|i| i.kind == *kind && i.subject.as_str() == *subject)
            .unwrap_or_else(|| panic!("{}: no {kind} on {subject} in {:?}", draft.id, delta.interactions));
        markers.insert(i.order, ms.iter().map(|m| m.to_string()).collect());
    }
    assert_eq!(
        markers.len(),
        delta.interactions.len(),
        "{}: markers must cover every interaction: {:?}",
        draft.id,
        delta.interactions
    );
    EvaluationCase {
        case_schema: CASE_SCHEMA,
        id: draft.id.to_owned(),
        description: draft.description.to_owned(),
        prev_snapshot: base.clone(),
        curr_snapshot: curr,
        base_report,
        target_anchors: draft.targets.iter().map(|t| Id::from(*t)).collect::<BTreeSet<_>>(),
        markers,
    }
}

/// Builds every case in a fixed order.
pub fn build_suite() -> Vec<EvaluationCase> {
    let base = base_workspace();
    let agents = Agents::new(Arc::new(MockBackend), ModelConfig::default());
    DRAFTS.iter().map(|d| build(d, &base, &agents)).collect()
}

pub fn case_file_name(index: usize, case: &EvaluationCase) -> String {
    format!("{:02}_{}.json", index + 1, case.id)
}

/// Writes the suite as one JSON file per case.
pub fn write_suite(dir: &Path, cases: &[EvaluationCase]) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for (i, c) in cases.iter().enumerate() {
        std::fs::write(dir.join(case_file_name(i, c)), c.to_json())?;
    }
    Ok(())
}
