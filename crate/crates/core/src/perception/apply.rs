use thiserror::Error;

use super::diff::MOVE_THRESHOLD;
use super::types::*;
use crate::workspace::{resolve_membership, Id, WorkspaceSnapshot};

#[derive(Debug, Error, PartialEq)]
pub enum ApplyError {
    #[error("delta starts at version {delta} but snapshot is version {snapshot}")]
    VersionMismatch { delta: u64, snapshot: u64 },
    #[error("conflict: interaction {order} ({kind}) references {subject}, {reason}")]
    Conflict {
        order: u32,
        kind: InteractionKind,
        subject: Id,
        reason: &'static str,
    },
    #[error("interaction {order} ({kind}) carries a payload that does not fit its kind")]
    Malformed { order: u32, kind: InteractionKind },
}

/// Replays a delta onto the snapshot it was computed from.
///
/// Interactions are applied in delta order, which puts removals before additions so a
/// frame deleted and recreated under the same id round-trips.
pub fn apply(prev: &WorkspaceSnapshot, delta: &InteractionDelta) -> Result<WorkspaceSnapshot, ApplyError> {
    if delta.from_version != prev.version {
        return Err(ApplyError::VersionMismatch {
            delta: delta.from_version,
            snapshot: prev.version,
        });
    }
    let mut s = prev.clone();
    for i in &delta.interactions {
        apply_one(&mut s, i)?;
    }
    if let Some(adj) = &delta.prompt_adjustment {
        if let Some(c) = &adj.task_description_changed {
            s.prompt_settings.task_description = c.new.clone();
        }
        if let Some(c) = &adj.components_changed {
            s.prompt_settings.components = c.new.clone();
        }
        if let Some(c) = &adj.model_config_changed {
            s.prompt_settings.model_config = c.new.clone();
        }
    }
    s.version = delta.to_version;
    Ok(s)
}

fn apply_one(s: &mut WorkspaceSnapshot, i: &SemanticInteraction) -> Result<(), ApplyError> {
    use InteractionKind::*;
    let conflict = |reason| ApplyError::Conflict {
        order: i.order,
        kind: i.kind,
        subject: i.subject.clone(),
        reason,
    };
    let malformed = || ApplyError::Malformed {
        order: i.order,
        kind: i.kind,
    };
    if !i.has_complete_payload() {
        return Err(malformed());
    }
    let absent = "which is absent";
    let present = "which already exists";

    match (i.kind, i.after.as_ref()) {
        (FrameRemoved, _) => {
            let before = s.frames.len();
            s.frames.retain(|f| f.id != i.subject);
            if s.frames.len() == before {
                return Err(conflict(absent));
            }
        }
        (FrameAdded, Some(Payload::Frame { frame })) => {
            if s.frame(&i.subject).is_some() {
                return Err(conflict(present));
            }
            s.frames.push(frame.clone());
        }
        (FrameRenamed, Some(Payload::FrameName { name })) => {
            frame_mut(s, &i.subject).ok_or_else(|| conflict(absent))?.name = name.clone();
        }
        (FrameMoved, Some(Payload::FrameGeometry { position, size })) => {
            let f = frame_mut(s, &i.subject).ok_or_else(|| conflict(absent))?;
            f.position = *position;
            f.size = *size;
        }
        (FrameReparented, Some(Payload::FrameParent { parent })) => {
            frame_mut(s, &i.subject).ok_or_else(|| conflict(absent))?.parent = parent.clone();
        }
        (DocumentReassigned | DocumentMoved, Some(Payload::Placement { position, size, .. })) => {
            let d = s
                .documents
                .iter_mut()
                .find(|d| d.id == i.subject)
                .ok_or_else(|| conflict(absent))?;
            d.position = *position;
            d.size = *size;
        }
        (NoteRemoved, _) => {
            let before = s.notes.len();
            s.notes.retain(|n| n.id != i.subject);
            if s.notes.len() == before {
                return Err(conflict(absent));
            }
        }
        (NoteAdded, Some(Payload::Note { note, .. })) => {
            if s.note(&i.subject).is_some() {
                return Err(conflict(present));
            }
            s.notes.push(note.clone());
        }
        (NoteEdited | NoteReassigned, Some(Payload::Note { note, .. })) => {
            let n = s
                .notes
                .iter_mut()
                .find(|n| n.id == i.subject)
                .ok_or_else(|| conflict(absent))?;
            *n = note.clone();
        }
        (HighlightRemoved, _) => {
            let before = s.highlights.len();
            s.highlights.retain(|h| h.id != i.subject);
            if s.highlights.len() == before {
                return Err(conflict(absent));
            }
            for d in &mut s.documents {
                d.highlights.retain(|h| h != &i.subject);
            }
        }
        (HighlightAdded, Some(Payload::Highlight { highlight, .. })) => {
            if s.highlight(&i.subject).is_some() {
                return Err(conflict(present));
            }
            let d = s
                .documents
                .iter_mut()
                .find(|d| d.id == highlight.document)
                .ok_or_else(|| conflict("whose document is absent"))?;
            d.highlights.push(highlight.id.clone());
            s.highlights.push(highlight.clone());
        }
        (HighlightCountEdited, Some(Payload::HighlightCount { count })) => {
            highlight_mut(s, &i.subject).ok_or_else(|| conflict(absent))?.count = *count;
        }
        (HighlightPolarityToggled, Some(Payload::HighlightPolarity { polarity })) => {
            highlight_mut(s, &i.subject).ok_or_else(|| conflict(absent))?.polarity = *polarity;
        }
        _ => return Err(malformed()),
    }
    Ok(())
}

fn frame_mut<'a>(s: &'a mut WorkspaceSnapshot, id: &Id) -> Option<&'a mut crate::workspace::Frame> {
    s.frames.iter_mut().find(|f| &f.id == id)
}

fn highlight_mut<'a>(
    s: &'a mut WorkspaceSnapshot,
    id: &Id,
) -> Option<&'a mut crate::workspace::Highlight> {
    s.highlights.iter_mut().find(|h| &h.id == id)
}

/// Equality on canonical forms, up to what perception observes.
///
/// Document and note positions may differ by less than [`MOVE_THRESHOLD`] when the
/// item keeps its owning frame and size, since such drags are not perceived.
/// Everything else (entities, fields, memberships, settings) must match exactly.
pub fn semantically_equal(a: &WorkspaceSnapshot, b: &WorkspaceSnapshot) -> bool {
    let (ca, cb) = (a.canonical(), b.canonical());
    if ca == cb {
        return true;
    }
    if resolve_membership(&ca) != resolve_membership(&cb) {
        return false;
    }
    let (mut ja, mut jb) = (ca.clone(), cb.clone());
    if ja.documents.len() != jb.documents.len() || ja.notes.len() != jb.notes.len() {
        return false;
    }
    for (da, db) in ja.documents.iter_mut().zip(jb.documents.iter_mut()) {
        if da.id == db.id && da.size == db.size && da.position.distance(&db.position) < MOVE_THRESHOLD {
            db.position = da.position;
        }
    }
    for (na, nb) in ja.notes.iter_mut().zip(jb.notes.iter_mut()) {
        if na.id == nb.id && na.size == nb.size && na.position.distance(&nb.position) < MOVE_THRESHOLD {
            nb.position = na.position;
        }
    }
    ja == jb
}
