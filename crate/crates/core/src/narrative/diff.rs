use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::report::{ComponentKey, Report, ReportComponent};

/// Word-overlap ratio at or above which an adjacent delete/insert pair is a rewording.
pub const MODIFIED_OVERLAP: f64 = 0.5;

/// Sentence index used for a component heading.
pub const HEADING_INDEX: i64 = -1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChangeKind {
    Inserted,
    Deleted,
    Modified,
}

/// One changed sentence. Indices point into the old report for the `before` side and
/// into the new report for the `after` side; a sentence index of -1 is the heading.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SentenceChange {
    pub key: ComponentKey,
    pub change: ChangeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub old_component: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub old_sentence: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub new_component: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub new_sentence: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub before: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub after: Option<String>,
}

impl SentenceChange {
    pub fn is_heading(&self) -> bool {
        self.old_sentence == Some(HEADING_INDEX) || self.new_sentence == Some(HEADING_INDEX)
    }

    /// The same change seen from the other direction.
    pub fn swapped(&self) -> SentenceChange {
        SentenceChange {
            key: self.key.clone(),
            change: match self.change {
                ChangeKind::Inserted => ChangeKind::Deleted,
                ChangeKind::Deleted => ChangeKind::Inserted,
                ChangeKind::Modified => ChangeKind::Modified,
            },
            old_component: self.new_component,
            old_sentence: self.new_sentence,
            new_component: self.old_component,
            new_sentence: self.old_sentence,
            before: self.after.clone(),
            after: self.before.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RevisionDiff {
    pub changes: Vec<SentenceChange>,
    pub changed_anchors: BTreeSet<ComponentKey>,
}

impl RevisionDiff {
    pub fn is_empty(&self) -> bool {
        self.changes.is_empty()
    }

    pub fn changed_body_anchors(&self) -> impl Iterator<Item = &ComponentKey> {
        self.changed_anchors.iter().filter(|k| k.is_body())
    }
}

/// Lowercased alphanumeric words.
pub fn words(s: &str) -> Vec<String> {
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Multiset word overlap normalized by the longer sentence.
pub fn word_overlap(a: &str, b: &str) -> f64 {
    let (wa, wb) = (words(a), words(b));
    let longest = wa.len().max(wb.len());
    if longest == 0 {
        return 0.0;
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for w in &wa {
        *counts.entry(w).or_default() += 1;
    }
    let mut common = 0;
    for w in &wb {
        if let Some(c) = counts.get_mut(w.as_str()) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    common as f64 / longest as f64
}

enum Op {
    Keep,
    Delete(usize),
    Insert(usize),
}

/// Edit script over two sentence lists via longest common subsequence.
///
/// Ties skip the lexicographically smaller sentence, which makes the alignment
/// independent of argument order.
fn lcs_script(a: &[String], b: &[String]) -> Vec<Op> {
    let (n, m) = (a.len(), b.len());
    let mut dp = vec![vec![0u32; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            dp[i][j] = if a[i] == b[j] {
                dp[i + 1][j + 1] + 1
            } else {
                dp[i + 1][j].max(dp[i][j + 1])
            };
        }
    }
    let (mut i, mut j) = (0, 0);
    let mut ops = Vec::new();
    while i < n && j < m {
        if a[i] == b[j] {
            ops.push(Op::Keep);
            i += 1;
            j += 1;
        } else {
            let skip_a = dp[i + 1][j];
            let skip_b = dp[i][j + 1];
            if skip_a > skip_b || (skip_a == skip_b && a[i] <= b[j]) {
                ops.push(Op::Delete(i));
                i += 1;
            } else {
                ops.push(Op::Insert(j));
                j += 1;
            }
        }
    }
    ops.extend((i..n).map(Op::Delete));
    ops.extend((j..m).map(Op::Insert));
    ops
}

fn sentence_changes(
    key: &ComponentKey,
    old: (usize, &ReportComponent),
    new: (usize, &ReportComponent),
    out: &mut Vec<SentenceChange>,
) {
    let (oi, oc) = old;
    let (ni, nc) = new;
    if oc.heading != nc.heading {
        out.push(SentenceChange {
            key: key.clone(),
            change: ChangeKind::Modified,
            old_component: Some(oi),
            old_sentence: Some(HEADING_INDEX),
            new_component: Some(ni),
            new_sentence: Some(HEADING_INDEX),
            before: Some(oc.heading.clone()),
            after: Some(nc.heading.clone()),
        });
    }

    let ops = lcs_script(&oc.sentences, &nc.sentences);
    let mut deletes = Vec::new();
    let mut inserts = Vec::new();
    let flush = |deletes: &mut Vec<usize>, inserts: &mut Vec<usize>, out: &mut Vec<SentenceChange>| {
        let paired = deletes.len().min(inserts.len());
        let mut rest_del = Vec::new();
        let mut rest_ins = Vec::new();
        for k in 0..paired {
            let (d, s) = (deletes[k], inserts[k]);
            if word_overlap(&oc.sentences[d], &nc.sentences[s]) >= MODIFIED_OVERLAP {
                out.push(SentenceChange {
                    key: key.clone(),
                    change: ChangeKind::Modified,
                    old_component: Some(oi),
                    old_sentence: Some(d as i64),
                    new_component: Some(ni),
                    new_sentence: Some(s as i64),
                    before: Some(oc.sentences[d].clone()),
                    after: Some(nc.sentences[s].clone()),
                });
            } else {
                rest_del.push(d);
                rest_ins.push(s);
            }
        }
        rest_del.extend_from_slice(&deletes[paired..]);
        rest_ins.extend_from_slice(&inserts[paired..]);
        for d in rest_del {
            out.push(deleted(key, oi, d as i64, &oc.sentences[d]));
        }
        for s in rest_ins {
            out.push(inserted(key, ni, s as i64, &nc.sentences[s]));
        }
        deletes.clear();
        inserts.clear();
    };
    for op in ops {
        match op {
            Op::Keep => flush(&mut deletes, &mut inserts, out),
            Op::Delete(i) => deletes.push(i),
            Op::Insert(j) => inserts.push(j),
        }
    }
    flush(&mut deletes, &mut inserts, out);
}

fn deleted(key: &ComponentKey, component: usize, sentence: i64, text: &str) -> SentenceChange {
    SentenceChange {
        key: key.clone(),
        change: ChangeKind::Deleted,
        old_component: Some(component),
        old_sentence: Some(sentence),
        new_component: None,
        new_sentence: None,
        before: Some(text.to_owned()),
        after: None,
    }
}

fn inserted(key: &ComponentKey, component: usize, sentence: i64, text: &str) -> SentenceChange {
    SentenceChange {
        key: key.clone(),
        change: ChangeKind::Inserted,
        old_component: None,
        old_sentence: None,
        new_component: Some(component),
        new_sentence: Some(sentence),
        before: None,
        after: Some(text.to_owned()),
    }
}

/// Sentence-level diff between two report versions.
///
/// Components align by key. A component present on one side only contributes its heading
/// and every sentence as deleted or inserted.
pub fn diff_reports(old: &Report, new: &Report) -> RevisionDiff {
    let mut changes = Vec::new();
    let old_index: HashMap<ComponentKey, usize> = old
        .components
        .iter()
        .enumerate()
        .rev()
        .map(|(i, c)| (c.key(), i))
        .collect();
    let mut seen = BTreeSet::new();

    for (ni, nc) in new.components.iter().enumerate() {
        let key = nc.key();
        if !seen.insert(key.clone()) {
            continue;
        }
        match old_index.get(&key) {
            Some(&oi) => sentence_changes(&key, (oi, &old.components[oi]), (ni, nc), &mut changes),
            None => {
                changes.push(inserted(&key, ni, HEADING_INDEX, &nc.heading));
                for (s, text) in nc.sentences.iter().enumerate() {
                    changes.push(inserted(&key, ni, s as i64, text));
                }
            }
        }
    }
    let mut seen_old = BTreeSet::new();
    for (oi, oc) in old.components.iter().enumerate() {
        let key = oc.key();
        if seen.contains(&key) || !seen_old.insert(key.clone()) {
            continue;
        }
        changes.push(deleted(&key, oi, HEADING_INDEX, &oc.heading));
        for (s, text) in oc.sentences.iter().enumerate() {
            changes.push(deleted(&key, oi, s as i64, text));
        }
    }

    let changed_anchors = changes.iter().map(|c| c.key.clone()).collect();
    RevisionDiff {
        changes,
        changed_anchors,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workspace::{ComponentKind, Id};

    fn body(anchor: &str, sentences: &[&str]) -> ReportComponent {
        ReportComponent::new(
            ComponentKind::Body,
            Some(Id::from(anchor)),
            anchor,
            sentences.iter().map(|s| s.to_string()).collect(),
        )
    }

    fn summary(sentences: &[&str]) -> ReportComponent {
        ReportComponent::new(
            ComponentKind::Summary,
            None,
            "Bottom Line",
            sentences.iter().map(|s| s.to_string()).collect(),
        )
    }

    fn report(components: Vec<ReportComponent>) -> Report {
        Report::new(1, components)
    }

    #[test]
    fn identity_is_empty() {
        let r = report(vec![summary(&["S."]), body("F", &["A.", "B."])]);
        let d = diff_reports(&r, &r);
        assert!(d.is_empty());
        assert!(d.changed_anchors.is_empty());
    }

    #[test]
    fn appended_sentence_is_one_insert() {
        let old = report(vec![summary(&["S."]), body("F", &["A one.", "B two."]), body("G", &["C."])]);
        let new = report(vec![
            summary(&["S."]),
            body("F", &["A one.", "B two.", "Budget limits apply."]),
            body("G", &["C."]),
        ]);
        let d = diff_reports(&old, &new);
        assert_eq!(d.changes.len(), 1);
        assert_eq!(d.changes[0].change, ChangeKind::Inserted);
        assert_eq!(d.changes[0].new_sentence, Some(2));
        assert_eq!(d.changed_anchors.iter().map(|k| k.to_string()).collect::<Vec<_>>(), ["F"]);
    }

    #[test]
    fn rewording_collapses_to_modified() {
        // overlap {x, met, y} / max(3, 5) = 0.6
        assert!((word_overlap("X met Y.", "X met Y in NYC.") - 0.6).abs() < 1e-12);
        let old = report(vec![body("F", &["X met Y."])]);
        let new = report(vec![body("F", &["X met Y in NYC."])]);
        let d = diff_reports(&old, &new);
        assert_eq!(d.changes.len(), 1);
        assert_eq!(d.changes[0].change, ChangeKind::Modified);
        assert_eq!(d.changes[0].before.as_deref(), Some("X met Y."));
    }

    #[test]
    fn replacement_below_threshold_stays_split() {
        let old = report(vec![body("F", &["Alpha beta gamma delta."])]);
        let new = report(vec![body("F", &["Totally different words here."])]);
        let kinds: Vec<_> = diff_reports(&old, &new).changes.iter().map(|c| c.change).collect();
        assert_eq!(kinds, [ChangeKind::Deleted, ChangeKind::Inserted]);
    }

    #[test]
    fn heading_change_and_removed_component() {
        let old = report(vec![summary(&["S."]), body("F", &["A."]), body("G", &[])]);
        let mut renamed = body("F", &["A."]);
        renamed.heading = "Risks".into();
        let new = report(vec![summary(&["S."]), renamed]);
        let d = diff_reports(&old, &new);
        assert!(d.changes.iter().any(|c| c.is_heading() && c.change == ChangeKind::Modified));
        // G had no sentences but its heading disappears, so it still counts as changed
        assert!(d.changed_anchors.contains(&ComponentKey::Body(Id::from("G"))));
        assert_eq!(d.changed_anchors.len(), 2);
    }

    #[test]
    fn swap_exchanges_inserted_and_deleted() {
        let old = report(vec![body("F", &["X.", "Y."]), summary(&["Same."])]);
        let new = report(vec![body("F", &["Y.", "X."]), body("H", &["New."])]);
        let mut forward: Vec<_> = diff_reports(&old, &new).changes.iter().map(SentenceChange::swapped).collect();
        let mut backward = diff_reports(&new, &old).changes;
        forward.sort();
        backward.sort();
        assert_eq!(forward, backward);
    }
}
