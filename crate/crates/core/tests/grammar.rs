use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stt_core::testkit::{mutate, random_trace};
use stt_core::trace::{extract_motion_tags, extract_tracks};
use stt_core::{parse_trace, serialize_trace, validate_format};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn parse_inverts_serialize(seed in any::<u64>()) {
        let trace = random_trace(&mut rng(seed), 16);
        let text = serialize_trace(&trace);
        prop_assert!(validate_format(&text).valid, "{text}");
        prop_assert_eq!(parse_trace(&text).unwrap(), trace);
    }

    #[test]
    fn canonical_form_is_a_fixed_point(seed in any::<u64>()) {
        let mut r = rng(seed);
        let trace = random_trace(&mut r, 12);
        let noisy = mutate(&mut r, &serialize_trace(&trace));
        if let Ok(parsed) = parse_trace(&noisy) {
            let once = serialize_trace(&parsed);
            let twice = serialize_trace(&parse_trace(&once).unwrap());
            prop_assert_eq!(once, twice);
        }
    }

    #[test]
    fn valid_implies_parseable(seed in any::<u64>()) {
        let mut r = rng(seed);
        let trace = random_trace(&mut r, 12);
        let noisy = mutate(&mut r, &serialize_trace(&trace));
        let report = validate_format(&noisy);
        if report.valid {
            prop_assert!(parse_trace(&noisy).is_ok());
        }
        // a parse failure always comes with at least one violation
        if parse_trace(&noisy).is_err() {
            prop_assert!(!report.valid);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(5000))]

    #[test]
    fn arbitrary_text_never_panics(s in "\\PC*") {
        let _ = parse_trace(&s);
        let _ = validate_format(&s);
    }

    #[test]
    fn arbitrary_bytes_never_panic(bytes in prop::collection::vec(any::<u8>(), 0..256)) {
        let s = String::from_utf8_lossy(&bytes);
        let _ = parse_trace(&s);
        let _ = validate_format(&s);
    }

    #[test]
    fn tag_soup_never_panics(parts in prop::collection::vec(prop::sample::select(vec![
        "<think>", "</think>", "<answer>", "</answer>", "<obj>", "</obj>", "<box>", "</box>",
        "<t>", "</t>", "<motion", "/>", ">", "obj=\"a\"", " dir=\"N\"", " speed=\"slow\"",
        " scale=\"stable\"", "[0.1,0.2,0.3,0.4]", " at ", "s", "1.5", "-2", "\"", "=", " ", "x",
    ]), 0..40)) {
        let s = parts.concat();
        let _ = parse_trace(&s);
        let _ = validate_format(&s);
    }
}

#[test]
fn violation_offsets_are_character_offsets() {
    let src = "<think>é ü </box></think><answer>x</answer>";
    let report = validate_format(src);
    assert_eq!(report.violations.len(), 1);
    let loc = report.violations[0].location;
    let chars: Vec<char> = src.chars().collect();
    let slice: String = chars[loc.start..loc.end].iter().collect();
    assert_eq!(slice, "</box>");
}

#[test]
fn every_violation_is_reported() {
    let src = r#"pre<think><obj>a</obj><box>[0.5,0,0.1,1]</box> at <t>-1</t>s <motion obj="a" dir="UP" speed="slow" scale="big"/></think><answer>x</answer>"#;
    let report = validate_format(src);
    let ids: Vec<String> = report
        .violations
        .iter()
        .map(|v| serde_json::to_value(v.rule_id).unwrap().as_str().unwrap().to_string())
        .collect();
    for want in ["text-outside-blocks", "degenerate-box", "negative-timestamp", "bad-direction-vocab", "bad-scale-vocab"] {
        assert!(ids.iter().any(|i| i == want), "{want} missing from {ids:?}");
    }
}

#[test]
fn extraction_groups_by_object() {
    let src = r#"<think><obj>Red  Car</obj><box>[0.1,0.1,0.2,0.2]</box> at <t>3</t>s
        <obj>dog</obj><box>[0.5,0.5,0.6,0.6]</box> at <t>1</t>s
        <obj>red car</obj><box>[0.2,0.1,0.3,0.2]</box> at <t>1</t>s
        <motion obj="red car" dir="W" speed="slow" scale="stable"/></think><answer>A</answer>"#;
    let trace = parse_trace(src).unwrap();
    let tracks = extract_tracks(&trace);
    assert_eq!(tracks.len(), 2);
    let car: Vec<f64> = tracks["red car"].iter().map(|(t, _)| *t).collect();
    assert_eq!(car, vec![1.0, 3.0]);
    let tags = extract_motion_tags(&trace);
    assert_eq!(tags["red car"].len(), 1);
}
