//! Unbiased pass@k estimation from per-question sample judgments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassKRecord {
    pub question_id: String,
    /// Samples generated.
    pub n: u64,
    /// Samples judged correct.
    pub c: u64,
}

impl PassKRecord {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.c > self.n {
            return Err(Error::precondition(format!(
                "record {:?} needs n >= 1 and c <= n (n = {}, c = {})",
                self.question_id, self.n, self.c
            )));
        }
        Ok(())
    }
}

/// `1 - C(n - c, k) / C(n, k)`, evaluated as `1 - prod_{i = n-c+1}^{n} (1 - k / i)`.
pub fn pass_at_k(n: u64, c: u64, k: u64) -> Result<f64> {
    if k == 0 || k > n || c > n {
        return Err(Error::precondition(format!(
            "pass@k needs 1 <= k <= n and c <= n (n = {n}, c = {c}, k = {k})"
        )));
    }
    if c == 0 {
        return Ok(0.0);
    }
    if k > n - c {
        return Ok(1.0);
    }
    let kf = k as f64;
    let prod: f64 = (n - c + 1..=n).map(|i| 1.0 - kf / i as f64).product();
    Ok(1.0 - prod)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassKCurve {
    pub ks: Vec<u64>,
    /// Mean pass@k over the records with `n >= k`.
    pub values: Vec<f64>,
    pub record_count: u64,
    /// Records left out of each k because they have fewer than k samples.
    pub skipped: Vec<u64>,
}

pub fn aggregate(records: &[PassKRecord], ks: &[u64]) -> Result<PassKCurve> {
    if records.is_empty() {
        return Err(Error::EmptyAggregate);
    }
    for r in records {
        r.validate()?;
    }
    let mut values = Vec::with_capacity(ks.len());
    let mut skipped = Vec::with_capacity(ks.len());
    for &k in ks {
        if k == 0 {
            return Err(Error::precondition("k must be at least 1"));
        }
        let (sum, used) = records
            .iter()
            .filter(|r| r.n >= k)
            .try_fold((0.0f64, 0u64), |(s, m), r| {
                pass_at_k(r.n, r.c, k).map(|v| (s + v, m + 1))
            })?;
        if used == 0 {
            return Err(Error::precondition(format!(
                "no record has at least {k} samples"
            )));
        }
        let left_out = records.len() as u64 - used;
        if left_out > 0 {
            log::warn!("pass@{k}: skipped {left_out} record(s) with n < {k}");
        }
        values.push(sum / used as f64);
        skipped.push(left_out);
    }
    Ok(PassKCurve {
        ks: ks.to_vec(),
        values,
        record_count: records.len() as u64,
        skipped,
    })
}

/// Unique integers nearest to a geometric progression from 1 to `k_max` with
/// `points` targets; always includes both endpoints.
pub fn log_spaced_ks(k_max: u64, points: usize) -> Vec<u64> {
    if k_max <= 1 {
        return vec![1];
    }
    if points <= 2 {
        return vec![1, k_max];
    }
    let ln_max = (k_max as f64).ln();
    let mut ks: Vec<u64> = (0..points)
        .map(|j| {
            let t = (ln_max * j as f64 / (points - 1) as f64).exp();
            (t.round() as u64).clamp(1, k_max)
        })
        .collect();
    ks.push(1);
    ks.push(k_max);
    ks.sort_unstable();
    ks.dedup();
    ks
}

pub fn curve_table(records: &[PassKRecord], k_max: u64, points: usize) -> Result<PassKCurve> {
    if records.is_empty() {
        return Err(Error::EmptyAggregate);
    }
    let min_n = records.iter().map(|r| r.n).min().unwrap_or(0);
    if k_max == 0 || k_max > min_n {
        return Err(Error::precondition(format!(
            "k_max = {k_max} must be between 1 and the smallest n ({min_n})"
        )));
    }
    aggregate(records, &log_spaced_ks(k_max, points))
}

pub fn render_csv(curve: &PassKCurve) -> String {
    let mut out = String::from("k,pass_at_k\n");
    for (k, v) in curve.ks.iter().zip(&curve.values) {
        out.push_str(&format!("{k},{v}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(n: u64, c: u64) -> PassKRecord {
        PassKRecord {
            question_id: format!("q{n}-{c}"),
            n,
            c,
        }
    }

    #[test]
    fn estimator_examples() {
        assert_eq!(pass_at_k(128, 0, 5).unwrap(), 0.0);
        assert_eq!(pass_at_k(128, 1, 128).unwrap(), 1.0);
        // 5 of the 6 two-element subsets of {c, c, w, w} hold a correct sample
        assert!((pass_at_k(4, 2, 2).unwrap() - 5.0 / 6.0).abs() < 1e-12);
        assert!((pass_at_k(10, 3, 1).unwrap() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn estimator_preconditions() {
        assert!(pass_at_k(4, 5, 1).is_err());
        assert!(pass_at_k(4, 1, 5).is_err());
        assert!(pass_at_k(4, 1, 0).is_err());
        assert!(pass_at_k(0, 0, 0).is_err());
    }

    #[test]
    fn large_n_is_stable() {
        let v = pass_at_k(10_000, 3, 5_000).unwrap();
        assert!(v.is_finite() && v > 0.8 && v < 1.0);
    }

    #[test]
    fn aggregate_examples() {
        let curve = aggregate(&[rec(4, 4), rec(4, 0)], &[1]).unwrap();
        assert_eq!(curve.values, vec![0.5]);
        let curve = aggregate(&[rec(4, 2)], &[1, 2]).unwrap();
        assert!((curve.values[0] - 0.5).abs() < 1e-12);
        assert!((curve.values[1] - 5.0 / 6.0).abs() < 1e-12);
        let curve = aggregate(&[rec(8, 8), rec(3, 3)], &[1, 2, 3]).unwrap();
        assert_eq!(curve.values, vec![1.0, 1.0, 1.0]);
        assert!(matches!(aggregate(&[], &[1]), Err(Error::EmptyAggregate)));
    }

    #[test]
    fn short_records_are_skipped_per_k() {
        let curve = aggregate(&[rec(8, 0), rec(2, 2)], &[1, 4]).unwrap();
        assert_eq!(curve.skipped, vec![0, 1]);
        assert_eq!(curve.values, vec![0.5, 0.0]);
        assert!(aggregate(&[rec(2, 1)], &[3]).is_err());
        assert!(aggregate(&[rec(2, 3)], &[1]).is_err());
    }

    #[test]
    fn log_grid() {
        assert_eq!(log_spaced_ks(128, 8), vec![1, 2, 4, 8, 16, 32, 64, 128]);
        assert_eq!(log_spaced_ks(1, 8), vec![1]);
        assert_eq!(log_spaced_ks(100, 2), vec![1, 100]);
        let ks = log_spaced_ks(10, 20);
        assert_eq!(ks.first(), Some(&1));
        assert_eq!(ks.last(), Some(&10));
        assert!(ks.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn curve_requires_k_max_within_samples() {
        assert!(curve_table(&[rec(4, 1)], 8, 4).is_err());
        let c = curve_table(&[rec(128, 3)], 128, 8).unwrap();
        assert_eq!(c.ks.len(), 8);
        assert!(c.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn csv_shape() {
        let c = aggregate(&[rec(4, 2)], &[1]).unwrap();
        assert_eq!(render_csv(&c), "k,pass_at_k\n1,0.5\n");
    }
}
