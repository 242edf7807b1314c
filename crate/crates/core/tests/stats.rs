mod common;

use common::nearest_rank_oracle;
use linksynth::stats::{compute_stats, compute_stats_sharded, DEFAULT_BUCKETS};
use linksynth::validate::SourcePair;
use linksynth::{DatasetRecord, Relation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn record(q_len: usize, a_len: usize, relation: Relation) -> DatasetRecord {
    DatasetRecord {
        question: "q".repeat(q_len),
        answer: "a".repeat(a_len),
        relation,
        pair: SourcePair {
            a: "A".into(),
            b: "B".into(),
            hub: None,
        },
        flags: vec![],
    }
}

/// Answers drawn inside each bucket, `per_bucket[i]` of them in bucket i.
fn bucketed_fixture(seed: u64, per_bucket: &[usize]) -> Vec<DatasetRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (i, &count) in per_bucket.iter().enumerate() {
        let lo = DEFAULT_BUCKETS[i] as usize;
        let hi = DEFAULT_BUCKETS
            .get(i + 1)
            .map_or(lo + 5_000, |h| *h as usize);
        for _ in 0..count {
            let rel = if rng.gen_bool(0.4) {
                Relation::DualLink
            } else {
                Relation::CoMention
            };
            // question length 0 keeps qa length equal to answer length
            out.push(record(0, rng.gen_range(lo..hi), rel));
        }
    }
    // shuffle so shards do not line up with buckets
    for i in (1..out.len()).rev() {
        let j = rng.gen_range(0..=i);
        out.swap(i, j);
    }
    out
}

#[test]
fn bucket_counts_are_exact() {
    let per_bucket = [3, 11, 17, 40, 25, 9, 5];
    let records = bucketed_fixture(1, &per_bucket);
    let report = compute_stats(&records, DEFAULT_BUCKETS).unwrap();
    let got: Vec<u64> = report
        .buckets
        .answer
        .buckets
        .iter()
        .map(|b| b.count)
        .collect();
    assert_eq!(
        got,
        per_bucket.iter().map(|&c| c as u64).collect::<Vec<_>>()
    );
    let got_qa: Vec<u64> = report.buckets.qa.buckets.iter().map(|b| b.count).collect();
    assert_eq!(got_qa, got);
    let total: f64 = report
        .buckets
        .answer
        .buckets
        .iter()
        .map(|b| b.percent)
        .sum();
    assert!((total - 100.0).abs() < 1e-9);
}

#[test]
fn boundary_values_land_in_upper_bucket() {
    let records: Vec<_> = DEFAULT_BUCKETS
        .iter()
        .map(|&b| record(0, b as usize, Relation::DualLink))
        .collect();
    let report = compute_stats(&records, DEFAULT_BUCKETS).unwrap();
    assert!(report.buckets.answer.buckets.iter().all(|b| b.count == 1));
}

#[test]
fn percentiles_match_nearest_rank() {
    let records = bucketed_fixture(2, &[5, 20, 30, 30, 20, 7, 3]);
    let lens: Vec<u64> = records.iter().map(|r| r.answer.len() as u64).collect();
    let s = compute_stats(&records, DEFAULT_BUCKETS)
        .unwrap()
        .overall
        .answer_chars;
    for (p, got) in [
        (5.0, s.p5),
        (25.0, s.p25),
        (50.0, s.p50),
        (75.0, s.p75),
        (95.0, s.p95),
    ] {
        assert_eq!(got, Some(nearest_rank_oracle(&lens, p) as f64), "p{p}");
    }
    assert_eq!(s.min, lens.iter().min().map(|&v| v as f64));
    assert_eq!(s.max, lens.iter().max().map(|&v| v as f64));
}

#[test]
fn shard_merge_equals_single_pass() {
    let records = bucketed_fixture(3, &[10, 30, 50, 80, 40, 20, 10]);
    let single = compute_stats(&records, DEFAULT_BUCKETS).unwrap();
    for shards in [1, 2, 3, 7, 16] {
        let merged = compute_stats_sharded(&records, DEFAULT_BUCKETS, shards).unwrap();
        let (a, b) = (&single.overall.qa_chars, &merged.overall.qa_chars);
        assert!((a.mean.unwrap() - b.mean.unwrap()).abs() < 1e-9);
        assert!((a.std.unwrap() - b.std.unwrap()).abs() < 1e-9);
        assert_eq!(single.buckets, merged.buckets);
        assert_eq!(single.composition, merged.composition);
        assert_eq!(a.p50, b.p50);
    }
}

#[test]
fn population_moments() {
    let records: Vec<_> = [2usize, 4, 4, 4, 5, 5, 7, 9]
        .iter()
        .map(|&n| record(0, n, Relation::CoMention))
        .collect();
    let s = compute_stats(&records, DEFAULT_BUCKETS)
        .unwrap()
        .overall
        .answer_chars;
    assert_eq!(s.mean, Some(5.0));
    assert_eq!(s.std, Some(2.0));
}
