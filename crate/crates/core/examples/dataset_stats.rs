//! Length statistics over a synthetic dataset: overall, per relation, bucketed,
//! and the parallel sharded variant.
//!
//! ```bash
//! cargo run -p linksynth --example dataset_stats
//! ```

use linksynth::stats::{
    compute_stats, compute_stats_sharded, render_report, ReportFormat, DEFAULT_BUCKETS,
};
use linksynth::validate::SourcePair;
use linksynth::{DatasetRecord, Relation};

fn main() -> linksynth::Result<()> {
    let records: Vec<DatasetRecord> = (0..500)
        .map(|i| DatasetRecord {
            question: format!("Question number {i} about two related topics?"),
            answer: "step ".repeat(20 + (i * 37) % 900) + "Therefore, done.",
            relation: if i % 3 == 0 {
                Relation::DualLink
            } else {
                Relation::CoMention
            },
            pair: SourcePair {
                a: format!("A{i}"),
                b: format!("B{i}"),
                hub: None,
            },
            flags: vec![],
        })
        .collect();

    let report = compute_stats(&records, DEFAULT_BUCKETS)?;
    println!("{}", render_report(&report, ReportFormat::Table));

    let sharded = compute_stats_sharded(&records, DEFAULT_BUCKETS, 8)?;
    println!(
        "mean qa chars: single {:?}, sharded {:?}",
        report.overall.qa_chars.mean, sharded.overall.qa_chars.mean
    );
    Ok(())
}
