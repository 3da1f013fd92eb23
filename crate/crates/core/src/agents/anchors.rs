use std::collections::{BTreeMap, BTreeSet};

use crate::narrative::{ComponentKey, DocumentContext, FrameContext, GenerationContext, NoteContext, Report};
use crate::perception::{InteractionDelta, InteractionKind, Payload, SemanticInteraction};
use crate::workspace::{Frame, Id, Polarity};

use super::types::Target;

/// Label used in generated sentences for content outside every frame.
pub const UNASSIGNED_LABEL: &str = "the unassigned material";

/// Resolves workspace items to the report component that talks about them.
///
/// Items inside nested frames resolve to their main frame. Frames removed in the
/// current delta are resolved through their last known parent.
#[derive(Debug, Clone)]
pub struct AnchorIndex {
    /// Item or frame id -> main frame, `None` for unframed items.
    roots: BTreeMap<Id, Option<Id>>,
    names: BTreeMap<Id, String>,
    removed_parents: BTreeMap<Id, Option<Id>>,
    highlights: BTreeMap<Id, (String, Polarity)>,
    mains: Vec<Id>,
    report_keys: BTreeSet<ComponentKey>,
}

impl AnchorIndex {
    pub fn new(context: &GenerationContext, report: &Report, removed_frames: &[Frame]) -> Self {
        let mut idx = AnchorIndex {
            roots: BTreeMap::new(),
            names: BTreeMap::new(),
            removed_parents: BTreeMap::new(),
            highlights: BTreeMap::new(),
            mains: context.frames.iter().map(|f| f.id.clone()).collect(),
            report_keys: report.keys().into_iter().collect(),
        };
        for f in removed_frames {
            idx.names.insert(f.id.clone(), f.name.clone());
            idx.removed_parents.insert(f.id.clone(), f.parent.clone());
        }
        for f in &context.frames {
            idx.index_frame(f, &f.id);
        }
        idx.index_items(&context.unassigned.documents, &context.unassigned.notes, None);
        idx
    }

    fn index_frame(&mut self, f: &FrameContext, root: &Id) {
        self.roots.insert(f.id.clone(), Some(root.clone()));
        self.names.insert(f.id.clone(), f.name.clone());
        self.index_items(&f.documents, &f.notes, Some(root));
        for c in &f.children {
            self.index_frame(c, root);
        }
    }

    fn index_items(&mut self, docs: &[DocumentContext], notes: &[NoteContext], root: Option<&Id>) {
        for d in docs {
            self.roots.insert(d.id.clone(), root.cloned());
            for h in &d.highlights {
                self.roots.insert(h.id.clone(), root.cloned());
                self.highlights.insert(h.id.clone(), (h.text.clone(), h.polarity));
            }
        }
        for n in notes {
            self.roots.insert(n.id.clone(), root.cloned());
        }
    }

    pub fn removed_frames(delta: &InteractionDelta) -> Vec<Frame> {
        delta
            .interactions
            .iter()
            .filter(|i| i.kind == InteractionKind::FrameRemoved)
            .filter_map(|i| match &i.before {
                Some(Payload::Frame { frame }) => Some(frame.clone()),
                _ => None,
            })
            .collect()
    }

    /// Main frame above `frame`, or the frame itself when it is a main frame.
    pub fn root_of_frame(&self, frame: &Id) -> Option<Id> {
        let mut current = frame.clone();
        for _ in 0..=self.removed_parents.len() {
            if let Some(root) = self.roots.get(&current) {
                return root.clone();
            }
            match self.removed_parents.get(&current) {
                Some(Some(parent)) => current = parent.clone(),
                Some(None) => return Some(current),
                None => return None,
            }
        }
        None
    }

    /// Main frame owning a document, note or highlight of the current workspace.
    pub fn root_of_item(&self, item: &Id) -> Option<Id> {
        self.roots.get(item).cloned().flatten()
    }

    pub fn is_main(&self, frame: &Id) -> bool {
        self.mains.contains(frame)
    }

    pub fn has_component(&self, key: &ComponentKey) -> bool {
        self.report_keys.contains(key)
    }

    pub fn frame_name(&self, frame: &Id) -> Option<&str> {
        self.names.get(frame).map(String::as_str)
    }

    pub fn highlight(&self, id: &Id) -> Option<&(String, Polarity)> {
        self.highlights.get(id)
    }

    /// Where content without a main frame is discussed.
    pub fn fallback(&self) -> Target {
        if self.report_keys.contains(&ComponentKey::unassigned()) || self.mains.is_empty() {
            Target::Component(ComponentKey::unassigned())
        } else {
            Target::Component(ComponentKey::Summary)
        }
    }

    /// Component discussing content owned by `owner` (a frame id, possibly nested).
    pub fn target_for_owner(&self, owner: Option<&Id>) -> Target {
        match owner.and_then(|o| self.root_of_frame(o)) {
            Some(root) if self.is_main(&root) || self.has_component(&ComponentKey::Body(root.clone())) => {
                Target::body(&root)
            }
            _ => self.fallback(),
        }
    }

    pub fn label(&self, target: &Target) -> String {
        match target {
            Target::Component(ComponentKey::Body(id)) => self
                .frame_name(id)
                .map(str::to_owned)
                .unwrap_or_else(|| UNASSIGNED_LABEL.to_owned()),
            _ => UNASSIGNED_LABEL.to_owned(),
        }
    }

    /// Main frame an interaction is about; interactions sharing one are inferred together.
    pub fn subject_frame(&self, i: &SemanticInteraction) -> Option<Id> {
        use InteractionKind::*;
        match i.kind {
            FrameAdded | FrameRemoved | FrameRenamed | FrameMoved | FrameReparented => self.root_of_frame(&i.subject),
            HighlightCountEdited | HighlightPolarityToggled => self.root_of_item(&i.subject),
            _ => {
                let owner = i
                    .after
                    .as_ref()
                    .and_then(Payload::owner)
                    .or_else(|| i.before.as_ref().and_then(Payload::owner));
                owner.and_then(|o| self.root_of_frame(o))
            }
        }
    }
}

/// Groups interactions that share a subject frame, keeping delta order: a batch sits
/// at the position of its first interaction. Unframed interactions stay alone.
pub fn batch_interactions<'a>(delta: &'a InteractionDelta, index: &AnchorIndex) -> Vec<Vec<&'a SemanticInteraction>> {
    let mut batches: Vec<Vec<&SemanticInteraction>> = Vec::new();
    let mut by_frame: BTreeMap<Id, usize> = BTreeMap::new();
    for i in &delta.interactions {
        match index.subject_frame(i) {
            Some(frame) => match by_frame.get(&frame) {
                Some(&b) => batches[b].push(i),
                None => {
                    by_frame.insert(frame, batches.len());
                    batches.push(vec![i]);
                }
            },
            None => batches.push(vec![i]),
        }
    }
    batches
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::narrative::{serialize_context, ReportComponent};
    use crate::perception::perceive;
    use crate::workspace::builders::*;
    use crate::workspace::ComponentKind;

    fn prev() -> crate::workspace::WorkspaceSnapshot {
        let mut s = empty_snapshot(1);
        s.frames.push(frame("A", "Alpha", (0.0, 0.0), (200.0, 200.0), None, 1));
        s.frames.push(frame("N", "Nested", (50.0, 50.0), (60.0, 60.0), Some("A"), 2));
        s.frames.push(frame("B", "Beta", (500.0, 0.0), (100.0, 100.0), None, 3));
        s.documents.push(doc("D1", "One", "Hamid met Ali.", (50.0, 50.0)));
        s.documents.push(doc("D2", "Two", "text", (900.0, 0.0)));
        s
    }

    fn report() -> Report {
        Report::new(
            1,
            vec![
                ReportComponent::new(ComponentKind::Summary, None, "Bottom Line", vec!["S.".into()]),
                ReportComponent::new(ComponentKind::Body, Some(Id::from("A")), "Alpha", vec!["A.".into()]),
                ReportComponent::new(ComponentKind::Body, Some(Id::from("B")), "Beta", vec!["B.".into()]),
            ],
        )
    }

    #[test]
    fn nested_items_resolve_to_main_frame() {
        let s = prev();
        let idx = AnchorIndex::new(&serialize_context(&s).unwrap(), &report(), &[]);
        assert_eq!(idx.root_of_item(&Id::from("D1")), Some(Id::from("A")));
        assert_eq!(idx.root_of_item(&Id::from("D2")), None);
        assert_eq!(idx.target_for_owner(Some(&Id::from("N"))), Target::body(&Id::from("A")));
        assert_eq!(idx.target_for_owner(None), Target::Component(ComponentKey::Summary));
        assert_eq!(idx.label(&Target::body(&Id::from("A"))), "Alpha");
    }

    #[test]
    fn removed_frames_resolve_through_parent() {
        let p = prev();
        let mut c = p.clone();
        c.version = 2;
        c.frames.retain(|f| f.id.as_str() != "N");
        let delta = perceive(&p, &c).unwrap();
        let idx = AnchorIndex::new(&serialize_context(&c).unwrap(), &report(), &AnchorIndex::removed_frames(&delta));
        assert_eq!(idx.root_of_frame(&Id::from("N")), Some(Id::from("A")));
        let batches = batch_interactions(&delta, &idx);
        assert_eq!(batches.len(), 1);
    }

    #[test]
    fn batches_share_subject_frame() {
        let p = prev();
        let mut c = p.clone();
        c.version = 2;
        c.notes.push(note("n1", "first", (20.0, 20.0)));
        c.notes.push(note("n2", "second", (520.0, 0.0)));
        c.notes.push(note("n3", "third", (-20.0, -20.0)));
        c.notes.push(note("n4", "loose", (2000.0, 0.0)));
        c.notes.push(note("n5", "loose too", (2000.0, 500.0)));
        let delta = perceive(&p, &c).unwrap();
        let idx = AnchorIndex::new(&serialize_context(&c).unwrap(), &report(), &[]);
        let sizes: Vec<Vec<&str>> = batch_interactions(&delta, &idx)
            .iter()
            .map(|b| b.iter().map(|i| i.subject.as_str()).collect())
            .collect();
        assert_eq!(sizes, vec![vec!["n1", "n3"], vec!["n2"], vec!["n4"], vec!["n5"]]);
    }
}
