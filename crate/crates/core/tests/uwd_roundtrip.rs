mod common;

use common::arb_uwd;
use opetri_core::fixtures;
use opetri_core::uwd_dsl::{parse_uwd, print_named_uwd, print_uwd};
use proptest::collection::vec;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn parse_after_print_is_identity(u in arb_uwd()) {
        let text = print_uwd(&u).unwrap();
        let doc = parse_uwd(&text).unwrap();
        prop_assert_eq!(&doc.uwd, &u);
        prop_assert_eq!(doc.name, "anon");
        prop_assert_eq!(print_uwd(&doc.uwd).unwrap(), text);
    }

    #[test]
    fn arbitrary_text_never_panics(src in "\\PC{0,80}") {
        let _ = parse_uwd(&src);
    }

    #[test]
    fn token_soup_never_panics(parts in vec(prop_oneof![
        Just("uwd"), Just("junction"), Just("("), Just(")"), Just("{"), Just("}"),
        Just(","), Just(";"), Just("\n"), Just("# c\n"), Just("A"), Just("b1"), Just(" "),
    ], 0..40)) {
        let src: String = parts.concat();
        if let Err(e) = parse_uwd(&src) {
            prop_assert!(e.line >= 1 && e.col >= 1);
            prop_assert!(e.line <= src.lines().count().max(1) + 1);
        }
    }
}

#[test]
fn vaccination_diagram_shape() {
    let u = parse_uwd(fixtures::EPI_UWD).unwrap().uwd;
    assert_eq!(u.boxes.len(), 3);
    assert_eq!(u.port_count(), 10);
    assert_eq!(u.junctions.len(), 5);
    assert_eq!(u.outer_ports.len(), 5);
}

#[test]
fn named_print() {
    let doc = parse_uwd("uwd malaria(IH, IV) {\n  host(IH)\n  vector(IV)\n  bloodmeal(IH, IV)\n}")
        .unwrap();
    assert_eq!(
        print_named_uwd(&doc.name, &doc.uwd).unwrap().trim_end(),
        "uwd malaria(IH, IV) {\n  host(IH);\n  vector(IV);\n  bloodmeal(IH, IV);\n}"
    );
}
