//! Terse constructors for building workspaces in tests and curated suites.

use chrono::{DateTime, TimeZone, Utc};

use super::model::*;

/// Fixed timestamp base so constructed snapshots serialize deterministically.
pub fn fixed_time(version: u64) -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2025, 1, 1, 0, 0, 0).unwrap() + chrono::Duration::minutes(version as i64)
}

pub fn empty_snapshot(version: u64) -> WorkspaceSnapshot {
    WorkspaceSnapshot::new(version, fixed_time(version), PromptSettings::default())
}

pub fn frame(
    id: &str,
    name: &str,
    center: (f64, f64),
    size: (f64, f64),
    parent: Option<&str>,
    seq: u64,
) -> Frame {
    Frame {
        id: Id::from(id),
        name: name.to_owned(),
        position: Point(center.0, center.1),
        size: Size(size.0, size.1),
        parent: parent.map(Id::from),
        created_seq: seq,
    }
}

pub fn doc(id: &str, title: &str, body: &str, center: (f64, f64)) -> DocumentCard {
    DocumentCard {
        id: Id::from(id),
        title: title.to_owned(),
        body: body.to_owned(),
        position: Point(center.0, center.1),
        size: Size(20.0, 12.0),
        highlights: Vec::new(),
    }
}

pub fn note(id: &str, text: &str, center: (f64, f64)) -> Note {
    Note {
        id: Id::from(id),
        text: text.to_owned(),
        position: Point(center.0, center.1),
        size: Size(10.0, 10.0),
    }
}

/// Adds a highlight on the first occurrence of `needle` in the document body and
/// registers it on the document. Panics when the needle is absent.
pub fn add_highlight(
    snapshot: &mut WorkspaceSnapshot,
    id: &str,
    document: &str,
    needle: &str,
    count: u32,
    polarity: Polarity,
) {
    let d = snapshot
        .documents
        .iter_mut()
        .find(|d| d.id.as_str() == document)
        .unwrap_or_else(|| panic!("no document {document}"));
    let h = Highlight::on_text(id, d, needle, count, polarity)
        .unwrap_or_else(|| panic!("{needle:?} not in {document}"));
    d.highlights.push(h.id.clone());
    snapshot.highlights.push(h);
}

/// Removes a highlight and its document reference.
pub fn remove_highlight(snapshot: &mut WorkspaceSnapshot, id: &str) {
    snapshot.highlights.retain(|h| h.id.as_str() != id);
    for d in &mut snapshot.documents {
        d.highlights.retain(|h| h.as_str() != id);
    }
}
