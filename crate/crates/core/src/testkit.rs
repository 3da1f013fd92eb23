//! Seeded generators for random but valid workspace snapshot pairs.
//!
//! Coordinates are multiples of 0.5 so containment checks stay exact after translations.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::workspace::builders::{fixed_time, frame};
use crate::workspace::*;

const WORDS: [&str; 16] = [
    "alpha", "bravo", "harbor", "ledger", "courier", "meeting", "Queens", "budget", "visa",
    "warehouse", "transfer", "contact", "shipment", "Hamid", "station", "account",
];

fn coord<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    let steps = ((hi - lo) * 2.0) as i64;
    lo + rng.gen_range(0..=steps.max(0)) as f64 * 0.5
}

fn sentence<R: Rng>(rng: &mut R, n: usize) -> String {
    (0..n).map(|_| *WORDS.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

/// Random valid snapshot with at most `max_entities` frames, documents, highlights and notes.
pub fn random_snapshot<R: Rng>(rng: &mut R, version: u64, max_entities: usize) -> WorkspaceSnapshot {
    let mut s = WorkspaceSnapshot::new(version, fixed_time(version), PromptSettings::default());
    let budget = max_entities.max(2);
    let n_docs = rng.gen_range(1..=(budget / 3).max(1));
    let mut remaining = budget - n_docs;
    let n_frames = rng.gen_range(0..=remaining.min(5));
    remaining -= n_frames;
    let n_notes = rng.gen_range(0..=remaining.min(4));
    remaining -= n_notes;
    let n_high = rng.gen_range(0..=remaining.min(4));

    for i in 0..n_frames {
        add_random_frame(rng, &mut s, &format!("f{i}"), i as u64 + 1);
    }
    for i in 0..n_docs {
        let n = rng.gen_range(4..9);
        let body = format!("{}.", sentence(rng, n));
        s.documents.push(DocumentCard {
            id: Id::new(format!("d{i}")),
            title: format!("Doc {i}"),
            body,
            position: Point(coord(rng, -300.0, 300.0), coord(rng, -300.0, 300.0)),
            size: Size(20.0, 12.0),
            highlights: Vec::new(),
        });
    }
    for i in 0..n_notes {
        add_random_note(rng, &mut s, &format!("n{i}"));
    }
    for i in 0..n_high {
        add_random_highlight(rng, &mut s, &format!("h{i}"));
    }
    s
}

fn add_random_frame<R: Rng>(rng: &mut R, s: &mut WorkspaceSnapshot, id: &str, seq: u64) {
    let nest = !s.frames.is_empty() && rng.gen_bool(0.4);
    let f = if nest {
        let parent = s.frames.choose(rng).unwrap().clone();
        let w = (parent.size.0 / 2.0).floor().max(1.0);
        let h = (parent.size.1 / 2.0).floor().max(1.0);
        let slack_x = (parent.size.0 - w) / 2.0;
        let slack_y = (parent.size.1 - h) / 2.0;
        frame(
            id,
            &format!("Group {id}"),
            (
                parent.position.0 + coord(rng, -slack_x, slack_x).clamp(-slack_x, slack_x),
                parent.position.1 + coord(rng, -slack_y, slack_y).clamp(-slack_y, slack_y),
            ),
            (w, h),
            Some(parent.id.as_str()),
            seq,
        )
    } else {
        frame(
            id,
            &format!("Group {id}"),
            (coord(rng, -250.0, 250.0), coord(rng, -250.0, 250.0)),
            (coord(rng, 60.0, 200.0), coord(rng, 60.0, 200.0)),
            None,
            seq,
        )
    };
    s.frames.push(f);
}

fn add_random_note<R: Rng>(rng: &mut R, s: &mut WorkspaceSnapshot, id: &str) {
    let n = rng.gen_range(1..5);
    let text = sentence(rng, n);
    s.notes.push(Note {
        id: Id::new(id),
        text,
        position: Point(coord(rng, -300.0, 300.0), coord(rng, -300.0, 300.0)),
        size: Size(10.0, 10.0),
    });
}

fn add_random_highlight<R: Rng>(rng: &mut R, s: &mut WorkspaceSnapshot, id: &str) {
    let di = rng.gen_range(0..s.documents.len());
    let len = s.documents[di].body.chars().count();
    if len < 2 {
        return;
    }
    let start = rng.gen_range(0..len - 1);
    let end = rng.gen_range(start + 1..=len);
    let polarity = if rng.gen_bool(0.3) { Polarity::Reject } else { Polarity::Emphasize };
    let Some(h) = Highlight::extract(id, &s.documents[di], (start, end), rng.gen_range(1..4), polarity)
    else {
        return;
    };
    s.documents[di].highlights.push(h.id.clone());
    s.highlights.push(h);
}

fn translate_subtree(s: &mut WorkspaceSnapshot, root: &Id, dx: f64, dy: f64) {
    let ids = subtree(s, root);
    for f in &mut s.frames {
        if ids.contains(&f.id) {
            f.position = f.position.translate(dx, dy);
        }
    }
}

/// Random valid successor of `prev`: a handful of edits of every perceivable sort,
/// with the document corpus left intact.
pub fn random_successor<R: Rng>(rng: &mut R, prev: &WorkspaceSnapshot, max_entities: usize) -> WorkspaceSnapshot {
    let mut s = prev.clone();
    s.version = prev.version + rng.gen_range(1..3);
    s.timestamp = fixed_time(s.version);
    let mut next_id = 100;
    let mut fresh = |prefix: &str| {
        next_id += 1;
        format!("{prefix}{next_id}")
    };
    let entity_count =
        |s: &WorkspaceSnapshot| s.frames.len() + s.documents.len() + s.highlights.len() + s.notes.len();

    for _ in 0..rng.gen_range(0..6) {
        match rng.gen_range(0..14) {
            0 if entity_count(&s) < max_entities => {
                let seq = s.frames.iter().map(|f| f.created_seq).max().unwrap_or(0) + 1;
                add_random_frame(rng, &mut s, &fresh("f"), seq);
            }
            1 if !s.frames.is_empty() => {
                let victim = s.frames.choose(rng).unwrap().id.clone();
                s.frames.retain(|f| f.id != victim);
                for f in &mut s.frames {
                    if f.parent.as_ref() == Some(&victim) {
                        f.parent = None;
                    }
                }
            }
            2 if !s.frames.is_empty() => {
                let i = rng.gen_range(0..s.frames.len());
                s.frames[i].name = format!("Renamed {}", sentence(rng, 1));
            }
            3 if !s.frames.is_empty() => {
                // only top-level frames move freely; their subtree moves with them
                let mains: Vec<Id> = main_frames(&s).iter().map(|f| f.id.clone()).collect();
                if let Some(root) = mains.choose(rng) {
                    let (dx, dy) = (coord(rng, -40.0, 40.0), coord(rng, -40.0, 40.0));
                    translate_subtree(&mut s, root, dx, dy);
                }
            }
            4 if !s.frames.is_empty() => {
                let i = rng.gen_range(0..s.frames.len());
                let id = s.frames[i].id.clone();
                if s.frames[i].parent.is_some() {
                    s.frames[i].parent = None;
                } else {
                    let inside = subtree(&s, &id);
                    let b = s.frames[i].bounds();
                    let candidates: Vec<Id> = s
                        .frames
                        .iter()
                        .filter(|p| !inside.contains(&p.id) && p.bounds().contains(&b))
                        .map(|p| p.id.clone())
                        .collect();
                    if let Some(p) = candidates.choose(rng) {
                        s.frames[i].parent = Some(p.clone());
                    }
                }
            }
            5 | 6 => {
                let i = rng.gen_range(0..s.documents.len());
                let d = &mut s.documents[i];
                d.position = match rng.gen_range(0..3) {
                    0 => d.position.translate(coord(rng, -0.5, 0.5), coord(rng, -0.5, 0.5)),
                    1 => d.position.translate(coord(rng, -30.0, 30.0), coord(rng, -30.0, 30.0)),
                    _ => Point(coord(rng, -300.0, 300.0), coord(rng, -300.0, 300.0)),
                };
            }
            7 if entity_count(&s) < max_entities => add_random_note(rng, &mut s, &fresh("n")),
            8 if !s.notes.is_empty() => {
                let i = rng.gen_range(0..s.notes.len());
                s.notes.remove(i);
            }
            9 if !s.notes.is_empty() => {
                let i = rng.gen_range(0..s.notes.len());
                if rng.gen_bool(0.5) {
                    s.notes[i].text = sentence(rng, 3);
                } else {
                    let p = Point(coord(rng, -300.0, 300.0), coord(rng, -300.0, 300.0));
                    s.notes[i].position = p;
                }
            }
            10 if entity_count(&s) < max_entities => add_random_highlight(rng, &mut s, &fresh("h")),
            11 if !s.highlights.is_empty() => {
                let i = rng.gen_range(0..s.highlights.len());
                let id = s.highlights.remove(i).id;
                for d in &mut s.documents {
                    d.highlights.retain(|h| h != &id);
                }
            }
            12 if !s.highlights.is_empty() => {
                let i = rng.gen_range(0..s.highlights.len());
                if rng.gen_bool(0.5) {
                    s.highlights[i].count = rng.gen_range(1..5);
                } else {
                    s.highlights[i].polarity = s.highlights[i].polarity.toggled();
                }
            }
            13 => match rng.gen_range(0..3) {
                0 => s.prompt_settings.task_description = sentence(rng, 4),
                1 => s.prompt_settings.components.reverse(),
                _ => s.prompt_settings.model_config.temperature = coord(rng, 0.0, 2.0),
            },
            _ => {}
        }
    }
    s
}

/// A minimal snapshot pair whose delta is exactly one interaction of `kind`.
pub struct KindFixture {
    pub kind: crate::perception::InteractionKind,
    pub prev: WorkspaceSnapshot,
    pub curr: WorkspaceSnapshot,
}

fn fixture_base() -> WorkspaceSnapshot {
    use crate::workspace::builders::{add_highlight, doc, empty_snapshot, note};
    let mut s = empty_snapshot(1);
    s.frames = vec![
        frame("A", "Suspects", (0.0, 0.0), (200.0, 200.0), None, 1),
        frame("B", "Travel", (400.0, 0.0), (200.0, 200.0), None, 2),
        frame("C", "Meetings", (40.0, 40.0), (60.0, 60.0), Some("A"), 3),
        frame("E", "Empty", (800.0, 0.0), (100.0, 100.0), None, 4),
    ];
    s.documents = vec![
        doc("D1", "Memo", "Hamid flew to Queens, NYC in March.", (-50.0, -50.0)),
        doc("D2", "Ticket", "A ticket to Istanbul was paid in cash.", (400.0, 0.0)),
    ];
    add_highlight(&mut s, "H1", "D1", "Queens, NYC", 1, Polarity::Emphasize);
    s.notes = vec![note("N1", "check the courier", (-50.0, 50.0))];
    s
}

/// One fixture per interaction kind, in [`InteractionKind::ALL`](crate::perception::InteractionKind::ALL) order.
pub fn kind_fixtures() -> Vec<KindFixture> {
    use crate::perception::InteractionKind::*;
    use crate::workspace::builders::{add_highlight, fixed_time, note, remove_highlight};
    let base = fixture_base();
    let edit = |f: &dyn Fn(&mut WorkspaceSnapshot)| {
        let mut c = base.clone();
        c.version = 2;
        c.timestamp = fixed_time(2);
        f(&mut c);
        c
    };
    let by_id = |s: &mut WorkspaceSnapshot, id: &str| s.frames.iter().position(|f| f.id.as_str() == id).unwrap();
    let cases: Vec<(crate::perception::InteractionKind, WorkspaceSnapshot)> = vec![
        (FrameAdded, edit(&|s| s.frames.push(frame("F", "Funding", (800.0, 400.0), (100.0, 100.0), None, 5)))),
        (FrameRemoved, edit(&|s| s.frames.retain(|f| f.id.as_str() != "E"))),
        (FrameRenamed, edit(&|s| {
            let i = by_id(s, "B");
            s.frames[i].name = "Travel and Visas".into();
        })),
        (FrameMoved, edit(&|s| {
            let i = by_id(s, "E");
            s.frames[i].position = Point(820.0, 30.0);
        })),
        (FrameReparented, edit(&|s| {
            let i = by_id(s, "C");
            s.frames[i].parent = Some(Id::from("A2"));
        })),
        (DocumentReassigned, edit(&|s| s.documents[0].position = Point(450.0, 50.0))),
        (DocumentMoved, edit(&|s| s.documents[1].position = Point(420.0, 10.0))),
        (NoteAdded, edit(&|s| s.notes.push(note("N2", "mention budget limits", (450.0, -50.0))))),
        (NoteRemoved, edit(&|s| s.notes.clear())),
        (NoteEdited, edit(&|s| s.notes[0].text = "check the courier's phone".into())),
        (NoteReassigned, edit(&|s| s.notes[0].position = Point(450.0, -50.0))),
        (HighlightAdded, edit(&|s| add_highlight(s, "H2", "D2", "Istanbul", 1, Polarity::Emphasize))),
        (HighlightRemoved, edit(&|s| remove_highlight(s, "H1"))),
        (HighlightCountEdited, edit(&|s| s.highlights[0].count = 3)),
        (HighlightPolarityToggled, edit(&|s| s.highlights[0].polarity = Polarity::Reject)),
    ];
    cases
        .into_iter()
        .map(|(kind, curr)| {
            let mut prev = base.clone();
            let mut curr = curr;
            if kind == FrameReparented {
                // A second frame covering C so the reparent needs no geometry change.
                for s in [&mut prev, &mut curr] {
                    s.frames.push(frame("A2", "Contacts", (40.0, 40.0), (100.0, 100.0), None, 6));
                }
            }
            KindFixture { kind, prev, curr }
        })
        .collect()
}
