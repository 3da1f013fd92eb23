use sensemap_core::perception::{apply, perceive, InteractionKind};
use sensemap_core::testkit::kind_fixtures;
use sensemap_core::workspace::validate;

#[test]
fn each_kind_fixture_emits_exactly_its_kind() {
    let fixtures = kind_fixtures();
    let kinds: Vec<InteractionKind> = fixtures.iter().map(|f| f.kind).collect();
    assert_eq!(kinds, InteractionKind::ALL);
    for f in &fixtures {
        assert!(validate(&f.prev).is_empty(), "{}: {:?}", f.kind, validate(&f.prev));
        assert!(validate(&f.curr).is_empty(), "{}: {:?}", f.kind, validate(&f.curr));
        let d = perceive(&f.prev, &f.curr).unwrap();
        let got: Vec<InteractionKind> = d.interactions.iter().map(|i| i.kind).collect();
        assert_eq!(got, [f.kind], "{}", f.kind);
        assert_eq!(apply(&f.prev, &d).unwrap().canonical(), f.curr.canonical(), "{}", f.kind);
    }
}
