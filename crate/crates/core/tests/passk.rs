mod common;

use common::pass_at_k_by_enumeration;
use linksynth::pass_at_k;
use linksynth::passk::{aggregate, PassKRecord};

#[test]
fn matches_subset_enumeration() {
    for n in 1..=12u32 {
        for c in 0..=n {
            for k in 1..=n {
                let got = pass_at_k(n as u64, c as u64, k as u64).unwrap();
                let want = pass_at_k_by_enumeration(n, c, k);
                assert!(
                    (got - want).abs() < 1e-12,
                    "n={n} c={c} k={k}: {got} vs {want}"
                );
            }
        }
    }
}

#[test]
fn endpoint_identities() {
    for n in [1u64, 4, 128] {
        for c in 0..=n {
            let p1 = pass_at_k(n, c, 1).unwrap();
            assert!((p1 - c as f64 / n as f64).abs() < 1e-12);
            let pn = pass_at_k(n, c, n).unwrap();
            assert_eq!(pn, if c >= 1 { 1.0 } else { 0.0 });
        }
    }
}

#[test]
fn curve_is_mean_of_oracle_values() {
    let records: Vec<PassKRecord> = [(12, 3), (8, 0), (10, 10), (6, 1)]
        .iter()
        .enumerate()
        .map(|(i, &(n, c))| PassKRecord {
            question_id: format!("q{i}"),
            n,
            c,
        })
        .collect();
    let ks = [1u64, 2, 4, 6];
    let curve = aggregate(&records, &ks).unwrap();
    for (i, &k) in ks.iter().enumerate() {
        let want: f64 = records
            .iter()
            .map(|r| pass_at_k_by_enumeration(r.n as u32, r.c as u32, k as u32))
            .sum::<f64>()
            / records.len() as f64;
        assert!((curve.values[i] - want).abs() < 1e-12);
    }
}
