//! Validate the bundled adversarial completions in reject and flag mode.
//!
//! ```bash
//! cargo run -p linksynth --example validate_completions
//! ```

use std::path::Path;

use linksynth::synthesis::read_records;
use linksynth::validate::{find_attribution, validate_completions, OnViolation, ValidationPolicy};

fn main() -> linksynth::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/adversarial_raw.jsonl");
    let records = read_records(&path)?;

    let policy = ValidationPolicy::default();
    let (kept, report) = validate_completions(&records, &policy);
    println!(
        "reject mode: {} kept\n{}",
        kept.len(),
        serde_json::to_string_pretty(&report).unwrap()
    );

    let flag = ValidationPolicy {
        on_violation: OnViolation::Flag,
        ..policy.clone()
    };
    let (kept, _) = validate_completions(&records, &flag);
    for qa in kept.iter().filter(|q| !q.flags.is_empty()).take(3) {
        println!("{} -> {:?}", qa.source_pair_key, qa.flags);
    }

    println!(
        "{:?}",
        find_attribution(
            "According to Passage A, the bridge opened in 1890.",
            &policy.attribution_blacklist
        )
    );
    Ok(())
}
