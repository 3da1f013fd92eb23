use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sensemap_core::perception::*;
use sensemap_core::testkit::{random_snapshot, random_successor};
use sensemap_core::workspace::validate;

fn pair(seed: u64) -> (sensemap_core::workspace::WorkspaceSnapshot, sensemap_core::workspace::WorkspaceSnapshot) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prev = random_snapshot(&mut rng, 1, 20);
    let curr = random_successor(&mut rng, &prev, 20);
    (prev, curr)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn generated_snapshots_are_valid(seed in any::<u64>()) {
        let (prev, curr) = pair(seed);
        prop_assert!(validate(&prev).is_empty(), "{:?}", validate(&prev));
        prop_assert!(validate(&curr).is_empty(), "{:?}", validate(&curr));
    }

    #[test]
    fn apply_inverts_perceive(seed in any::<u64>()) {
        let (prev, curr) = pair(seed);
        let delta = perceive(&prev, &curr).unwrap();
        let applied = apply(&prev, &delta).unwrap();
        prop_assert!(semantically_equal(&applied, &curr));
        prop_assert!(delta.interactions.iter().all(|i| i.has_complete_payload()));
    }

    #[test]
    fn self_diff_is_empty(seed in any::<u64>()) {
        let (prev, _) = pair(seed);
        let mut bumped = prev.clone();
        bumped.version += 1;
        prop_assert!(perceive(&prev, &bumped).unwrap().interactions.is_empty());
    }

    #[test]
    fn add_remove_symmetry(seed in any::<u64>()) {
        let (prev, curr) = pair(seed);
        let forward = perceive(&prev, &curr).unwrap();
        let (mut a, mut b) = (curr.clone(), prev.clone());
        a.version = 1;
        b.version = 2;
        let backward = perceive(&a, &b).unwrap();
        let pairs = [
            (InteractionKind::FrameAdded, InteractionKind::FrameRemoved),
            (InteractionKind::NoteAdded, InteractionKind::NoteRemoved),
            (InteractionKind::HighlightAdded, InteractionKind::HighlightRemoved),
        ];
        for (add, remove) in pairs {
            let subjects = |d: &InteractionDelta, k| {
                let mut v: Vec<_> = d.interactions.iter().filter(|i| i.kind == k).map(|i| i.subject.clone()).collect();
                v.sort();
                v
            };
            prop_assert_eq!(subjects(&forward, add), subjects(&backward, remove));
            prop_assert_eq!(subjects(&forward, remove), subjects(&backward, add));
        }
    }

    #[test]
    fn deterministic_serialization(seed in any::<u64>()) {
        let (prev, curr) = pair(seed);
        prop_assert_eq!(perceive(&prev, &curr).unwrap().to_json(), perceive(&prev, &curr).unwrap().to_json());
    }

    #[test]
    fn snapshot_json_round_trip_is_exact(seed in any::<u64>()) {
        let (prev, _) = pair(seed);
        let once = prev.to_json();
        let parsed = sensemap_core::workspace::WorkspaceSnapshot::from_json(&once).unwrap();
        prop_assert_eq!(&parsed, &prev);
        prop_assert_eq!(parsed.to_json(), once);
    }

    #[test]
    fn delta_order_is_sorted_and_dense(seed in any::<u64>()) {
        let (prev, curr) = pair(seed);
        let d = perceive(&prev, &curr).unwrap();
        for (i, w) in d.interactions.iter().enumerate() {
            prop_assert_eq!(w.order as usize, i);
        }
        for w in d.interactions.windows(2) {
            prop_assert!((w[0].kind.class(), w[0].kind, &w[0].subject) <= (w[1].kind.class(), w[1].kind, &w[1].subject));
        }
    }
}
