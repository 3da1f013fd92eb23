use serde::{Deserialize, Serialize};

use super::report::{expected_layout, LayoutSlot};
use crate::workspace::{
    children, main_frames, resolve_membership, validate, ComponentSpec, Frame, Id, Membership,
    Polarity, Violation, WorkspaceSnapshot,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HighlightContext {
    pub id: Id,
    pub text: String,
    pub count: u32,
    pub polarity: Polarity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentContext {
    pub id: Id,
    pub title: String,
    pub body: String,
    pub highlights: Vec<HighlightContext>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoteContext {
    pub id: Id,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameContext {
    pub id: Id,
    pub name: String,
    pub documents: Vec<DocumentContext>,
    pub notes: Vec<NoteContext>,
    pub children: Vec<FrameContext>,
}

impl FrameContext {
    /// Documents of this frame and all nested frames, depth-first.
    pub fn all_documents(&self) -> Vec<&DocumentContext> {
        let mut out: Vec<&DocumentContext> = self.documents.iter().collect();
        for c in &self.children {
            out.extend(c.all_documents());
        }
        out
    }

    pub fn all_notes(&self) -> Vec<&NoteContext> {
        let mut out: Vec<&NoteContext> = self.notes.iter().collect();
        for c in &self.children {
            out.extend(c.all_notes());
        }
        out
    }

    pub fn find(&self, id: &Id) -> Option<&FrameContext> {
        if &self.id == id {
            return Some(self);
        }
        self.children.iter().find_map(|c| c.find(id))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct UnassignedGroup {
    pub documents: Vec<DocumentContext>,
    pub notes: Vec<NoteContext>,
}

/// Frame-grouped rendering of a workspace, the input every agent sees.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationContext {
    pub task_description: String,
    pub components: Vec<ComponentSpec>,
    /// Main frames in creation order; nested frames under `children`.
    pub frames: Vec<FrameContext>,
    pub unassigned: UnassignedGroup,
}

impl GenerationContext {
    pub fn main_frames(&self) -> Vec<(Id, String)> {
        self.frames.iter().map(|f| (f.id.clone(), f.name.clone())).collect()
    }

    pub fn has_unassigned_content(&self) -> bool {
        !self.unassigned.documents.is_empty() || !self.unassigned.notes.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty() && self.unassigned.documents.is_empty()
    }

    pub fn layout(&self) -> Vec<LayoutSlot> {
        expected_layout(&self.components, &self.main_frames(), self.has_unassigned_content())
    }

    pub fn frame(&self, id: &Id) -> Option<&FrameContext> {
        self.frames.iter().find_map(|f| f.find(id))
    }

    /// Main frame containing `id` (possibly itself).
    pub fn root_of(&self, id: &Id) -> Option<&FrameContext> {
        self.frames.iter().find(|f| f.find(id).is_some())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("context serialization is infallible")
    }
}

/// Deterministic frame-grouped rendering of a snapshot. Each document and note appears
/// under its owning frame, or under the Unassigned group.
pub fn serialize_context(snapshot: &WorkspaceSnapshot) -> Result<GenerationContext, Vec<Violation>> {
    let violations = validate(snapshot);
    if !violations.is_empty() {
        return Err(violations);
    }
    let membership = resolve_membership(snapshot);
    let frames = main_frames(snapshot)
        .into_iter()
        .map(|f| frame_context(snapshot, &membership, f))
        .collect();
    let unassigned = UnassignedGroup {
        documents: documents_owned_by(snapshot, &membership, None),
        notes: notes_owned_by(snapshot, &membership, None),
    };
    Ok(GenerationContext {
        task_description: snapshot.prompt_settings.task_description.clone(),
        components: snapshot.prompt_settings.components.clone(),
        frames,
        unassigned,
    })
}

fn frame_context(snapshot: &WorkspaceSnapshot, membership: &Membership, frame: &Frame) -> FrameContext {
    FrameContext {
        id: frame.id.clone(),
        name: frame.name.clone(),
        documents: documents_owned_by(snapshot, membership, Some(&frame.id)),
        notes: notes_owned_by(snapshot, membership, Some(&frame.id)),
        children: children(snapshot, &frame.id)
            .into_iter()
            .map(|c| frame_context(snapshot, membership, c))
            .collect(),
    }
}

fn documents_owned_by(
    snapshot: &WorkspaceSnapshot,
    membership: &Membership,
    owner: Option<&Id>,
) -> Vec<DocumentContext> {
    let mut docs: Vec<_> = snapshot
        .documents
        .iter()
        .filter(|d| membership.get(&d.id).map(Option::as_ref) == Some(owner))
        .map(|d| {
            let mut highlights: Vec<_> = snapshot
                .highlights
                .iter()
                .filter(|h| h.document == d.id)
                .collect();
            highlights.sort_by(|a, b| a.span.cmp(&b.span).then_with(|| a.id.cmp(&b.id)));
            DocumentContext {
                id: d.id.clone(),
                title: d.title.clone(),
                body: d.body.clone(),
                highlights: highlights
                    .into_iter()
                    .map(|h| HighlightContext {
                        id: h.id.clone(),
                        text: h.text.clone(),
                        count: h.count,
                        polarity: h.polarity,
                    })
                    .collect(),
            }
        })
        .collect();
    docs.sort_by(|a, b| a.id.cmp(&b.id));
    docs
}

fn notes_owned_by(snapshot: &WorkspaceSnapshot, membership: &Membership, owner: Option<&Id>) -> Vec<NoteContext> {
    let mut notes: Vec<_> = snapshot
        .notes
        .iter()
        .filter(|n| membership.get(&n.id).map(Option::as_ref) == Some(owner))
        .map(|n| NoteContext {
            id: n.id.clone(),
            text: n.text.clone(),
        })
        .collect();
    notes.sort_by(|a, b| a.id.cmp(&b.id));
    notes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workspace::builders::*;

    #[test]
    fn empty_snapshot_context() {
        let c = serialize_context(&empty_snapshot(1)).unwrap();
        assert!(c.frames.is_empty());
        assert_eq!(c.unassigned, UnassignedGroup::default());
        assert!(c.is_empty());
    }

    #[test]
    fn frame_with_highlighted_document() {
        let mut s = empty_snapshot(1);
        s.frames.push(frame("F", "Suspects", (0.0, 0.0), (100.0, 100.0), None, 1));
        s.documents.push(doc("D", "Intercept", "Hamid called twice.", (0.0, 0.0)));
        add_highlight(&mut s, "H", "D", "Hamid", 2, Polarity::Emphasize);
        let c = serialize_context(&s).unwrap();
        let expected = FrameContext {
            id: Id::from("F"),
            name: "Suspects".into(),
            documents: vec![DocumentContext {
                id: Id::from("D"),
                title: "Intercept".into(),
                body: "Hamid called twice.".into(),
                highlights: vec![HighlightContext {
                    id: Id::from("H"),
                    text: "Hamid".into(),
                    count: 2,
                    polarity: Polarity::Emphasize,
                }],
            }],
            notes: vec![],
            children: vec![],
        };
        assert_eq!(c.frames, vec![expected]);
        assert!(c.unassigned.documents.is_empty());
    }

    #[test]
    fn unframed_document_only_under_unassigned() {
        let mut s = empty_snapshot(1);
        s.frames.push(frame("F", "Suspects", (0.0, 0.0), (10.0, 10.0), None, 1));
        s.documents.push(doc("D", "Loose", "text", (500.0, 0.0)));
        let c = serialize_context(&s).unwrap();
        assert!(c.frames[0].documents.is_empty());
        assert_eq!(c.unassigned.documents.len(), 1);
        assert_eq!(c.to_json().matches("\"Loose\"").count(), 1);
    }

    #[test]
    fn nested_frames_depth_first() {
        let mut s = empty_snapshot(1);
        s.frames.push(frame("A", "Outer", (0.0, 0.0), (200.0, 200.0), None, 1));
        s.frames.push(frame("B", "Inner", (50.0, 50.0), (40.0, 40.0), Some("A"), 2));
        s.documents.push(doc("D", "Deep", "text", (50.0, 50.0)));
        let c = serialize_context(&s).unwrap();
        assert_eq!(c.frames.len(), 1);
        assert_eq!(c.frames[0].children[0].documents[0].title, "Deep");
        assert_eq!(c.frames[0].all_documents().len(), 1);
        assert_eq!(c.root_of(&Id::from("B")).unwrap().id, Id::from("A"));
    }
}
