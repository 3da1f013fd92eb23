use std::collections::BTreeSet;

use super::types::{IntentInference, PlanAction, PlanStep, RepairKind, ScopeRepair, Source, Target};
use crate::narrative::{ComponentKey, Report, ReportComponent, RevisionDiff};

/// Drops steps that a paragraph removal or (re)creation makes moot, so conflicting intents
/// resolve as Remove > Reassign > Edit > Add. Inferences left without steps are dropped.
pub fn prune_conflicts(inferences: &[IntentInference]) -> Vec<IntentInference> {
    let replaced: BTreeSet<&ComponentKey> = inferences
        .iter()
        .flat_map(|i| &i.plan)
        .filter(|s| matches!(s.action, PlanAction::AddParagraph | PlanAction::RemoveParagraph))
        .filter_map(|s| s.target.component())
        .collect();
    inferences
        .iter()
        .map(|i| IntentInference {
            source: i.source.clone(),
            why: i.why.clone(),
            plan: i
                .plan
                .iter()
                .filter(|s| {
                    matches!(s.action, PlanAction::AddParagraph | PlanAction::RemoveParagraph)
                        || s.target.component().is_none_or(|k| !replaced.contains(k))
                })
                .cloned()
                .collect(),
        })
        .filter(|i| !i.plan.is_empty())
        .collect()
}

/// Restores everything the plan does not allow to change.
///
/// Components outside every step target come back byte-identical from `old`. New
/// components survive only under an `add_paragraph` step, removals only under a
/// `remove_paragraph` step, and reordering only under a `relocate_section` step. A step
/// targeting `structure` allows everything.
pub fn enforce_scope(old: &Report, proposed: Report, steps: &[&PlanStep]) -> (Report, Vec<ScopeRepair>) {
    if steps.iter().any(|s| s.target == Target::Structure) {
        return (proposed, Vec::new());
    }
    let keys_with = |action: PlanAction| -> BTreeSet<ComponentKey> {
        steps
            .iter()
            .filter(|s| s.action == action)
            .filter_map(|s| s.target.component().cloned())
            .collect()
    };
    let touched: BTreeSet<ComponentKey> = steps.iter().filter_map(|s| s.target.component().cloned()).collect();
    let may_add = keys_with(PlanAction::AddParagraph);
    let may_remove = keys_with(PlanAction::RemoveParagraph);
    let may_reorder = steps.iter().any(|s| s.action == PlanAction::RelocateSection);

    let version = proposed.version;
    let old_keys: Vec<ComponentKey> = old.keys();
    let old_index = |k: &ComponentKey| old_keys.iter().position(|o| o == k);
    let mut repairs = Vec::new();
    let mut out: Vec<ReportComponent> = Vec::new();
    let mut seen = BTreeSet::new();

    for c in proposed.components {
        let k = c.key();
        if !seen.insert(k.clone()) {
            repairs.push(ScopeRepair {
                key: k,
                repair: RepairKind::DroppedAddition,
            });
            continue;
        }
        match old_index(&k) {
            None if !may_add.contains(&k) => repairs.push(ScopeRepair {
                key: k,
                repair: RepairKind::DroppedAddition,
            }),
            None => out.push(c),
            Some(_) if touched.contains(&k) => out.push(c),
            Some(i) => {
                let original = &old.components[i];
                if &c != original {
                    repairs.push(ScopeRepair {
                        key: k,
                        repair: RepairKind::RestoredEdit,
                    });
                }
                out.push(original.clone());
            }
        }
    }

    if !may_reorder {
        let slots: Vec<usize> = (0..out.len()).filter(|&i| old_index(&out[i].key()).is_some()).collect();
        let mut olds: Vec<ReportComponent> = slots.iter().map(|&i| out[i].clone()).collect();
        let before: Vec<ComponentKey> = olds.iter().map(ReportComponent::key).collect();
        olds.sort_by_key(|c| old_index(&c.key()));
        for (slot, (c, prev)) in slots.iter().zip(olds.into_iter().zip(before)) {
            if c.key() != prev {
                repairs.push(ScopeRepair {
                    key: c.key(),
                    repair: RepairKind::RestoredOrder,
                });
            }
            out[*slot] = c;
        }
    }

    for (i, k) in old_keys.iter().enumerate() {
        if seen.contains(k) || may_remove.contains(k) {
            continue;
        }
        repairs.push(ScopeRepair {
            key: k.clone(),
            repair: RepairKind::RestoredRemoval,
        });
        let after = old_keys[..i]
            .iter()
            .rev()
            .find_map(|p| out.iter().position(|c| &c.key() == p));
        let at = after.map_or(0, |p| p + 1);
        out.insert(at, old.components[i].clone());
    }

    (
        Report {
            report_schema: old.report_schema,
            version,
            components: out,
        },
        repairs,
    )
}

/// Sources whose plans target each diff change, index-aligned with `diff.changes`.
pub fn provenance(diff: &RevisionDiff, inferences: &[IntentInference]) -> Vec<Vec<Source>> {
    diff.changes
        .iter()
        .map(|change| {
            let mut sources: BTreeSet<Source> = BTreeSet::new();
            for inf in inferences {
                if inf.plan.iter().any(|s| s.target.covers(&change.key)) {
                    sources.extend(inf.source.iter().copied());
                }
            }
            sources.into_iter().collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workspace::{ComponentKind, Id};

    fn comp(anchor: Option<&str>, text: &str) -> ReportComponent {
        let kind = if anchor.is_some() { ComponentKind::Body } else { ComponentKind::Summary };
        ReportComponent::new(kind, anchor.map(Id::from), anchor.unwrap_or("Bottom Line"), vec![text.to_owned()])
    }

    fn old() -> Report {
        Report::new(1, vec![comp(None, "S."), comp(Some("A"), "A."), comp(Some("B"), "B.")])
    }

    fn step(target: &str, action: PlanAction) -> PlanStep {
        PlanStep::new(target.parse().unwrap(), action, "x")
    }

    #[test]
    fn untargeted_edits_are_restored() {
        let proposed = Report::new(2, vec![comp(None, "S!"), comp(Some("A"), "A2."), comp(Some("B"), "B2.")]);
        let s = step("A", PlanAction::Insert);
        let (r, repairs) = enforce_scope(&old(), proposed, &[&s]);
        assert_eq!(r.components[0], old().components[0]);
        assert_eq!(r.components[1].sentences, ["A2."]);
        assert_eq!(r.components[2], old().components[2]);
        assert_eq!(r.version, 2);
        assert_eq!(repairs.len(), 2);
    }

    #[test]
    fn unplanned_structure_changes_revert() {
        let proposed = Report::new(2, vec![comp(Some("B"), "B."), comp(None, "S."), comp(Some("C"), "C.")]);
        let s = step("A", PlanAction::Insert);
        let (r, repairs) = enforce_scope(&old(), proposed, &[&s]);
        assert_eq!(r.components, old().components);
        let kinds: BTreeSet<_> = repairs.iter().map(|r| r.repair).collect();
        assert!(kinds.contains(&RepairKind::DroppedAddition));
        assert!(kinds.contains(&RepairKind::RestoredRemoval));
        assert!(kinds.contains(&RepairKind::RestoredOrder));
    }

    #[test]
    fn planned_structure_changes_stay() {
        let proposed = Report::new(2, vec![comp(None, "S."), comp(Some("B"), "B."), comp(Some("C"), "C.")]);
        let (a, b) = (step("A", PlanAction::RemoveParagraph), step("C", PlanAction::AddParagraph));
        let (r, repairs) = enforce_scope(&old(), proposed.clone(), &[&a, &b]);
        assert_eq!(r.components, proposed.components);
        assert!(repairs.is_empty());
    }

    #[test]
    fn removal_wins_over_edits() {
        let inf = |steps: Vec<PlanStep>, o| IntentInference {
            source: vec![Source::Interaction(o)],
            why: String::new(),
            plan: steps,
        };
        let pruned = prune_conflicts(&[
            inf(vec![step("A", PlanAction::RemoveParagraph)], 0),
            inf(vec![step("A", PlanAction::Insert)], 1),
            inf(vec![step("B", PlanAction::Insert)], 2),
        ]);
        assert_eq!(pruned.len(), 2);
        assert_eq!(pruned[1].source, [Source::Interaction(2)]);
    }
}
