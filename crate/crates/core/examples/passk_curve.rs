//! pass@k for a handful of questions, a single k and a log-spaced curve.
//!
//! ```bash
//! cargo run -p linksynth --example passk_curve
//! ```

use linksynth::pass_at_k;
use linksynth::passk::{aggregate, curve_table, log_spaced_ks, render_csv, PassKRecord};

fn main() -> linksynth::Result<()> {
    println!("pass@2 with 2 of 4 correct: {}", pass_at_k(4, 2, 2)?);

    let records: Vec<PassKRecord> = [0u64, 1, 3, 12, 64, 128]
        .iter()
        .enumerate()
        .map(|(i, &c)| PassKRecord {
            question_id: format!("q{i}"),
            n: 128,
            c,
        })
        .collect();

    let at1 = aggregate(&records, &[1])?;
    println!("mean pass@1: {:.4}", at1.values[0]);

    println!("grid: {:?}", log_spaced_ks(128, 8));
    print!("{}", render_csv(&curve_table(&records, 128, 8)?));
    Ok(())
}
