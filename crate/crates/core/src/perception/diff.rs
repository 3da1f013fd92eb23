use std::collections::BTreeMap;

use thiserror::Error;

use super::types::*;
use crate::workspace::{
    resolve_membership, validate, DocumentCard, Frame, Highlight, Id, Membership, Note,
    Violation, WorkspaceSnapshot,
};

/// Document moves shorter than this (in workspace units) that keep membership are drag noise.
pub const MOVE_THRESHOLD: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PerceiveError {
    #[error("snapshot versions out of order: {prev} is not before {curr}")]
    VersionOrder { prev: u64, curr: u64 },
    #[error("{which} snapshot is invalid: {}", join(.violations))]
    Validation {
        which: &'static str,
        violations: Vec<Violation>,
    },
    #[error("document {0} changed content or was added/removed; documents are fixed for a session")]
    CorpusChanged(Id),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Typed semantic-interaction delta between two snapshots of one session.
pub fn perceive(
    prev: &WorkspaceSnapshot,
    curr: &WorkspaceSnapshot,
) -> Result<InteractionDelta, PerceiveError> {
    if prev.version >= curr.version {
        return Err(PerceiveError::VersionOrder {
            prev: prev.version,
            curr: curr.version,
        });
    }
    for (which, s) in [("previous", prev), ("current", curr)] {
        let violations = validate(s);
        if !violations.is_empty() {
            return Err(PerceiveError::Validation { which, violations });
        }
    }

    let m_prev = resolve_membership(prev);
    let m_curr = resolve_membership(curr);
    let mut out = Vec::new();

    diff_frames(prev, curr, &mut out);
    diff_documents(prev, curr, &m_prev, &m_curr, &mut out)?;
    diff_notes(prev, curr, &m_prev, &m_curr, &mut out);
    diff_highlights(prev, curr, &m_prev, &m_curr, &mut out);

    out.sort_by(|a, b| {
        (a.kind.class(), a.kind, &a.subject).cmp(&(b.kind.class(), b.kind, &b.subject))
    });
    for (i, interaction) in out.iter_mut().enumerate() {
        interaction.order = i as u32;
    }

    let adjustment = perceive_prompt(prev, curr);
    Ok(InteractionDelta {
        delta_schema: DELTA_SCHEMA,
        from_version: prev.version,
        to_version: curr.version,
        interactions: out,
        prompt_adjustment: (!adjustment.is_empty()).then_some(adjustment),
    })
}

fn interaction(
    kind: InteractionKind,
    subject: &Id,
    before: Option<Payload>,
    after: Option<Payload>,
) -> SemanticInteraction {
    SemanticInteraction {
        order: 0,
        kind,
        subject: subject.clone(),
        before,
        after,
    }
}

fn index<'a, T, F: Fn(&'a T) -> &'a Id>(items: &'a [T], id: F) -> BTreeMap<&'a Id, &'a T> {
    items.iter().map(|x| (id(x), x)).collect()
}

fn diff_frames(prev: &WorkspaceSnapshot, curr: &WorkspaceSnapshot, out: &mut Vec<SemanticInteraction>) {
    use InteractionKind::*;
    let a = index(&prev.frames, |f: &Frame| &f.id);
    let b = index(&curr.frames, |f: &Frame| &f.id);
    let frame_payload = |f: &Frame| Payload::Frame { frame: f.clone() };

    for (id, old) in &a {
        match b.get(id) {
            None => out.push(interaction(FrameRemoved, id, Some(frame_payload(old)), None)),
            // creation order is identity: a changed sequence means a different frame
            Some(new) if new.created_seq != old.created_seq => {
                out.push(interaction(FrameRemoved, id, Some(frame_payload(old)), None));
                out.push(interaction(FrameAdded, id, None, Some(frame_payload(new))));
            }
            Some(new) => {
                if old.name != new.name {
                    out.push(interaction(
                        FrameRenamed,
                        id,
                        Some(Payload::FrameName { name: old.name.clone() }),
                        Some(Payload::FrameName { name: new.name.clone() }),
                    ));
                }
                if old.position != new.position || old.size != new.size {
                    out.push(interaction(
                        FrameMoved,
                        id,
                        Some(Payload::FrameGeometry {
                            position: old.position,
                            size: old.size,
                        }),
                        Some(Payload::FrameGeometry {
                            position: new.position,
                            size: new.size,
                        }),
                    ));
                }
                if old.parent != new.parent {
                    out.push(interaction(
                        FrameReparented,
                        id,
                        Some(Payload::FrameParent { parent: old.parent.clone() }),
                        Some(Payload::FrameParent { parent: new.parent.clone() }),
                    ));
                }
            }
        }
    }
    for (id, new) in &b {
        if !a.contains_key(id) {
            out.push(interaction(FrameAdded, id, None, Some(frame_payload(new))));
        }
    }
}

fn diff_documents(
    prev: &WorkspaceSnapshot,
    curr: &WorkspaceSnapshot,
    m_prev: &Membership,
    m_curr: &Membership,
    out: &mut Vec<SemanticInteraction>,
) -> Result<(), PerceiveError> {
    let a = index(&prev.documents, |d: &DocumentCard| &d.id);
    let b = index(&curr.documents, |d: &DocumentCard| &d.id);
    for id in a.keys().chain(b.keys()) {
        if !(a.contains_key(id) && b.contains_key(id)) {
            return Err(PerceiveError::CorpusChanged((*id).clone()));
        }
    }
    for (id, old) in &a {
        let new = b[id];
        if old.title != new.title || old.body != new.body {
            return Err(PerceiveError::CorpusChanged((*id).clone()));
        }
        let (owner_old, owner_new) = (m_prev[*id].clone(), m_curr[*id].clone());
        let placement = |d: &DocumentCard, owner: Option<Id>| Payload::Placement {
            position: d.position,
            size: d.size,
            owner,
        };
        let kind = if owner_old != owner_new {
            Some(InteractionKind::DocumentReassigned)
        } else if old.size != new.size || old.position.distance(&new.position) >= MOVE_THRESHOLD {
            Some(InteractionKind::DocumentMoved)
        } else {
            None
        };
        if let Some(kind) = kind {
            out.push(interaction(
                kind,
                id,
                Some(placement(old, owner_old)),
                Some(placement(new, owner_new)),
            ));
        }
    }
    Ok(())
}

fn diff_notes(
    prev: &WorkspaceSnapshot,
    curr: &WorkspaceSnapshot,
    m_prev: &Membership,
    m_curr: &Membership,
    out: &mut Vec<SemanticInteraction>,
) {
    use InteractionKind::*;
    let a = index(&prev.notes, |n: &Note| &n.id);
    let b = index(&curr.notes, |n: &Note| &n.id);
    let payload = |n: &Note, m: &Membership| Payload::Note {
        note: (*n).clone(),
        owner: m[&n.id].clone(),
    };
    for (id, old) in &a {
        match b.get(id) {
            None => out.push(interaction(NoteRemoved, id, Some(payload(old, m_prev)), None)),
            Some(new) => {
                if old.text != new.text {
                    out.push(interaction(
                        NoteEdited,
                        id,
                        Some(payload(old, m_prev)),
                        Some(payload(new, m_curr)),
                    ));
                }
                let repositioned = m_prev[*id] != m_curr[*id]
                    || old.size != new.size
                    || old.position.distance(&new.position) >= MOVE_THRESHOLD;
                if repositioned {
                    out.push(interaction(
                        NoteReassigned,
                        id,
                        Some(payload(old, m_prev)),
                        Some(payload(new, m_curr)),
                    ));
                }
            }
        }
    }
    for (id, new) in &b {
        if !a.contains_key(id) {
            out.push(interaction(NoteAdded, id, None, Some(payload(new, m_curr))));
        }
    }
}

fn diff_highlights(
    prev: &WorkspaceSnapshot,
    curr: &WorkspaceSnapshot,
    m_prev: &Membership,
    m_curr: &Membership,
    out: &mut Vec<SemanticInteraction>,
) {
    use InteractionKind::*;
    let a = index(&prev.highlights, |h: &Highlight| &h.id);
    let b = index(&curr.highlights, |h: &Highlight| &h.id);
    let payload = |h: &Highlight, m: &Membership| Payload::Highlight {
        highlight: h.clone(),
        owner: m.get(&h.document).cloned().flatten(),
    };
    for (id, old) in &a {
        match b.get(id) {
            None => out.push(interaction(HighlightRemoved, id, Some(payload(old, m_prev)), None)),
            Some(new) if new.document != old.document || new.span != old.span || new.text != old.text => {
                out.push(interaction(HighlightRemoved, id, Some(payload(old, m_prev)), None));
                out.push(interaction(HighlightAdded, id, None, Some(payload(new, m_curr))));
            }
            Some(new) => {
                if old.count != new.count {
                    out.push(interaction(
                        HighlightCountEdited,
                        id,
                        Some(Payload::HighlightCount { count: old.count }),
                        Some(Payload::HighlightCount { count: new.count }),
                    ));
                }
                if old.polarity != new.polarity {
                    out.push(interaction(
                        HighlightPolarityToggled,
                        id,
                        Some(Payload::HighlightPolarity { polarity: old.polarity }),
                        Some(Payload::HighlightPolarity { polarity: new.polarity }),
                    ));
                }
            }
        }
    }
    for (id, new) in &b {
        if !a.contains_key(id) {
            out.push(interaction(HighlightAdded, id, None, Some(payload(new, m_curr))));
        }
    }
}

/// Field-by-field comparison of the prompt settings.
pub fn perceive_prompt(prev: &WorkspaceSnapshot, curr: &WorkspaceSnapshot) -> PromptAdjustment {
    let (a, b) = (&prev.prompt_settings, &curr.prompt_settings);
    PromptAdjustment {
        task_description_changed: (a.task_description != b.task_description).then(|| Change {
            old: a.task_description.clone(),
            new: b.task_description.clone(),
        }),
        components_changed: (a.components != b.components).then(|| Change {
            old: a.components.clone(),
            new: b.components.clone(),
        }),
        model_config_changed: (a.model_config != b.model_config).then(|| Change {
            old: a.model_config.clone(),
            new: b.model_config.clone(),
        }),
    }
}
