mod common;

use common::{doc, fixture, golden};
use linksynth::synthesis::{
    read_records, render_cross_doc_prompt, render_single_doc_prompt, render_three_doc_prompt,
};
use linksynth::validate::{validate_completions, OnViolation, ValidationPolicy, ValidationReport};

fn read(path: std::path::PathBuf) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn goldens_match_byte_for_byte() {
    let x = doc(0, "X page", "X", &[]);
    let y = doc(1, "Y page", "Y", &[]);
    let z = doc(2, "Z page", "Z", &[]);
    assert_eq!(
        render_cross_doc_prompt(&x, &y, 50_000).unwrap(),
        read(golden("cross_doc.txt"))
    );
    assert_eq!(
        render_single_doc_prompt(&x, 50_000).unwrap(),
        read(golden("single_doc.txt"))
    );
    assert_eq!(
        render_three_doc_prompt(&x, &y, Some(&z), 50_000).unwrap(),
        read(golden("three_doc.txt"))
    );
}

#[test]
fn constraint_strings_present() {
    for name in ["cross_doc.txt", "three_doc.txt"] {
        let g = read(golden(name));
        assert!(g.contains("REQUIRE information from BOTH"), "{name}");
        assert!(g.contains("DO NOT use any attribution phrases"), "{name}");
    }
}

#[test]
fn passages_are_not_rescanned() {
    let x = doc(0, "X", "contains {text_b} literally", &[]);
    let y = doc(1, "Y", "plain", &[]);
    let p = render_cross_doc_prompt(&x, &y, 50_000).unwrap();
    assert!(p.contains("contains {text_b} literally"));
}

fn manifest_report() -> ValidationReport {
    let text = read(fixture("adversarial_manifest.json"));
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    serde_json::from_value(v["expected_report"].clone()).unwrap()
}

#[test]
fn adversarial_fixture_reject_mode() {
    let records = read_records(&fixture("adversarial_raw.jsonl")).unwrap();
    assert_eq!(records.len(), 50);
    let (accepted, report) = validate_completions(&records, &ValidationPolicy::default());
    assert_eq!(report, manifest_report());
    assert_eq!(accepted.len(), 25);
    for qa in &accepted {
        assert!(qa.answer.contains("Therefore,"));
        assert!(!qa.answer.to_lowercase().contains("passage"));
    }
}

#[test]
fn adversarial_fixture_flag_mode_keeps_everything() {
    let records = read_records(&fixture("adversarial_raw.jsonl")).unwrap();
    let policy = ValidationPolicy {
        on_violation: OnViolation::Flag,
        ..ValidationPolicy::default()
    };
    let (kept, report) = validate_completions(&records, &policy);
    assert_eq!(kept.len(), 45);
    assert_eq!(report.flagged, 20);
    assert_eq!(kept.iter().filter(|q| q.flags.is_empty()).count(), 25);
    assert_eq!(
        kept.iter()
            .filter(|q| q.flags.iter().any(|f| f == "attribution"))
            .count(),
        10
    );
}
