use std::collections::{BTreeMap, HashMap};

use super::model::{Frame, Id, Point, WorkspaceSnapshot};

/// Owning frame for every document and note; `None` means unframed.
pub type Membership = BTreeMap<Id, Option<Id>>;

/// Assigns each document and note to the smallest-area frame containing its center point.
///
/// Ties on area go to the lexicographically smallest frame id so the result does not
/// depend on the order frames are stored in.
pub fn resolve_membership(snapshot: &WorkspaceSnapshot) -> Membership {
    let mut membership = Membership::new();
    for doc in &snapshot.documents {
        membership.insert(doc.id.clone(), owner_at(&snapshot.frames, doc.position));
    }
    for note in &snapshot.notes {
        membership.insert(note.id.clone(), owner_at(&snapshot.frames, note.position));
    }
    membership
}

/// Smallest frame whose bounds contain `point`.
pub fn owner_at(frames: &[Frame], point: Point) -> Option<Id> {
    frames
        .iter()
        .filter(|f| f.bounds().contains_point(point))
        .min_by(|a, b| {
            a.bounds()
                .area()
                .total_cmp(&b.bounds().area())
                .then_with(|| a.id.cmp(&b.id))
        })
        .map(|f| f.id.clone())
}

/// Top-level frames in creation order. This order fixes body-paragraph order.
pub fn main_frames(snapshot: &WorkspaceSnapshot) -> Vec<&Frame> {
    let mut mains: Vec<&Frame> = snapshot.frames.iter().filter(|f| f.parent.is_none()).collect();
    mains.sort_by(|a, b| a.created_seq.cmp(&b.created_seq).then_with(|| a.id.cmp(&b.id)));
    mains
}

/// Top-level ancestor of `frame`; the frame itself when it is top-level.
/// Returns `None` for unknown ids or cyclic parent chains.
pub fn root_frame(snapshot: &WorkspaceSnapshot, frame: &Id) -> Option<Id> {
    let parents: HashMap<&Id, Option<&Id>> = snapshot
        .frames
        .iter()
        .map(|f| (&f.id, f.parent.as_ref()))
        .collect();
    let mut current = frame;
    for _ in 0..=snapshot.frames.len() {
        match parents.get(current)? {
            None => return Some(current.clone()),
            Some(p) => current = p,
        }
    }
    None
}

/// Main frame whose paragraph covers the given document or note, if any.
pub fn anchor_of(snapshot: &WorkspaceSnapshot, membership: &Membership, item: &Id) -> Option<Id> {
    let owner = membership.get(item)?.as_ref()?;
    root_frame(snapshot, owner)
}

/// Child frames of `parent` in creation order.
pub fn children<'a>(snapshot: &'a WorkspaceSnapshot, parent: &Id) -> Vec<&'a Frame> {
    let mut kids: Vec<&Frame> = snapshot
        .frames
        .iter()
        .filter(|f| f.parent.as_ref() == Some(parent))
        .collect();
    kids.sort_by(|a, b| a.created_seq.cmp(&b.created_seq).then_with(|| a.id.cmp(&b.id)));
    kids
}

/// Ids of `frame` and all its descendants.
pub fn subtree(snapshot: &WorkspaceSnapshot, frame: &Id) -> Vec<Id> {
    let mut out = vec![frame.clone()];
    let mut i = 0;
    while i < out.len() {
        let current = out[i].clone();
        for kid in children(snapshot, &current) {
            if !out.contains(&kid.id) {
                out.push(kid.id.clone());
            }
        }
        i += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workspace::builders::*;

    #[test]
    fn single_containment() {
        let mut s = empty_snapshot(1);
        s.frames.push(frame("F", "Suspects", (0.0, 0.0), (100.0, 100.0), None, 1));
        s.documents.push(doc("D", "Memo", "body", (10.0, 10.0)));
        let m = resolve_membership(&s);
        assert_eq!(m[&Id::from("D")], Some(Id::from("F")));
    }

    #[test]
    fn nested_picks_smallest_area() {
        let mut s = empty_snapshot(1);
        s.frames.push(frame("F", "Outer", (0.0, 0.0), (200.0, 200.0), None, 1));
        s.frames.push(frame("G", "Inner", (20.0, 20.0), (50.0, 50.0), Some("F"), 2));
        s.documents.push(doc("D", "Memo", "body", (25.0, 25.0)));
        s.documents.push(doc("E", "Memo 2", "body", (-50.0, -50.0)));
        let m = resolve_membership(&s);
        // oracle: enumerate containing frames, pick min area
        for (item, pos) in [("D", Point(25.0, 25.0)), ("E", Point(-50.0, -50.0))] {
            let expected = s
                .frames
                .iter()
                .filter(|f| f.bounds().contains_point(pos))
                .map(|f| (f.size.0 * f.size.1, f.id.clone()))
                .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
                .map(|(_, id)| id);
            assert_eq!(m[&Id::from(item)], expected);
        }
        assert_eq!(m[&Id::from("D")], Some(Id::from("G")));
        assert_eq!(m[&Id::from("E")], Some(Id::from("F")));
    }

    #[test]
    fn outside_all_frames() {
        let mut s = empty_snapshot(1);
        s.frames.push(frame("F", "Suspects", (0.0, 0.0), (10.0, 10.0), None, 1));
        s.notes.push(note("N", "far away", (500.0, 500.0)));
        assert_eq!(resolve_membership(&s)[&Id::from("N")], None);
    }

    #[test]
    fn main_frames_empty() {
        assert!(main_frames(&empty_snapshot(1)).is_empty());
    }

    #[test]
    fn main_frames_filters_nested() {
        let mut s = empty_snapshot(1);
        s.frames.push(frame("A", "A", (0.0, 0.0), (100.0, 100.0), None, 1));
        s.frames.push(frame("B", "B", (0.0, 0.0), (10.0, 10.0), Some("A"), 2));
        let ids: Vec<_> = main_frames(&s).iter().map(|f| f.id.as_str()).collect();
        assert_eq!(ids, ["A"]);
    }

    #[test]
    fn main_frames_sorted_by_creation() {
        let mut s = empty_snapshot(1);
        s.frames.push(frame("A", "A", (0.0, 0.0), (10.0, 10.0), None, 2));
        s.frames.push(frame("B", "B", (100.0, 0.0), (10.0, 10.0), None, 1));
        let ids: Vec<_> = main_frames(&s).iter().map(|f| f.id.as_str()).collect();
        assert_eq!(ids, ["B", "A"]);
    }

    #[test]
    fn root_and_subtree() {
        let mut s = empty_snapshot(1);
        s.frames.push(frame("A", "A", (0.0, 0.0), (100.0, 100.0), None, 1));
        s.frames.push(frame("B", "B", (0.0, 0.0), (50.0, 50.0), Some("A"), 2));
        s.frames.push(frame("C", "C", (0.0, 0.0), (10.0, 10.0), Some("B"), 3));
        assert_eq!(root_frame(&s, &Id::from("C")), Some(Id::from("A")));
        assert_eq!(subtree(&s, &Id::from("A")).len(), 3);
        assert_eq!(root_frame(&s, &Id::from("missing")), None);
    }
}
