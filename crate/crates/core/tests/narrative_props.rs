use proptest::prelude::*;
use sensemap_core::narrative::*;
use sensemap_core::workspace::{ComponentKind, Id};

fn sentence() -> impl Strategy<Value = String> {
    prop::sample::select(vec![
        "Hamid met the courier.",
        "Funds moved through Queens.",
        "The meeting was cancelled.",
        "Travel was booked in March.",
        "No further contact was logged.",
        "The courier met Hamid again.",
        "Budget limits were exceeded.",
    ])
    .prop_map(str::to_owned)
}

fn report() -> impl Strategy<Value = Report> {
    let body = (0usize..4, prop::collection::vec(sentence(), 0..5), "[A-Z][a-z]{2,6}");
    (
        prop::collection::vec(sentence(), 1..4),
        prop::collection::vec(body, 0..4),
        prop::option::of(prop::collection::vec(sentence(), 1..3)),
    )
        .prop_map(|(summary, bodies, conclusion)| {
            let mut components = vec![ReportComponent::new(ComponentKind::Summary, None, "Bottom Line", summary)];
            let mut used = std::collections::BTreeSet::new();
            for (anchor, sentences, heading) in bodies {
                if used.insert(anchor) {
                    components.push(ReportComponent::new(
                        ComponentKind::Body,
                        Some(Id::new(format!("F{anchor}"))),
                        heading,
                        sentences,
                    ));
                }
            }
            if let Some(c) = conclusion {
                components.push(ReportComponent::new(ComponentKind::Conclusion, None, "Conclusion", c));
            }
            Report::new(1, components)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn self_diff_is_empty(r in report()) {
        let d = diff_reports(&r, &r);
        prop_assert!(d.changes.is_empty());
        prop_assert!(d.changed_anchors.is_empty());
    }

    #[test]
    fn diff_is_symmetric(a in report(), b in report()) {
        let ab = diff_reports(&a, &b);
        let ba = diff_reports(&b, &a);
        let mut swapped: Vec<_> = ba.changes.iter().map(SentenceChange::swapped).collect();
        let mut forward = ab.changes.clone();
        let key = |c: &SentenceChange| (c.key.clone(), c.old_sentence, c.new_sentence, c.before.clone(), c.after.clone());
        swapped.sort_by_key(key);
        forward.sort_by_key(key);
        prop_assert_eq!(forward, swapped);
        prop_assert_eq!(ab.changed_anchors, ba.changed_anchors);
    }

    #[test]
    fn changed_anchors_come_from_either_side(a in report(), b in report()) {
        let d = diff_reports(&a, &b);
        let keys: std::collections::BTreeSet<_> = a.keys().into_iter().chain(b.keys()).collect();
        prop_assert!(d.changed_anchors.is_subset(&keys));
        for c in &d.changes {
            prop_assert!(d.changed_anchors.contains(&c.key));
        }
    }

    #[test]
    fn segmentation_keeps_non_space_characters(parts in prop::collection::vec(sentence(), 0..6)) {
        let text = parts.join("  ");
        let segs = segment_sentences(&text);
        let squash = |s: &str| s.chars().filter(|c| !c.is_whitespace()).collect::<String>();
        prop_assert_eq!(squash(&segs.concat()), squash(&text));
        prop_assert_eq!(segs, parts);
    }

    #[test]
    fn report_json_round_trip(r in report()) {
        prop_assert_eq!(Report::from_json(&r.to_json()).unwrap(), r);
    }
}
