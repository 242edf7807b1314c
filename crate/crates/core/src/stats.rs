//! Length statistics over a QA dataset: summary moments, nearest-rank
//! percentiles, half-open length buckets and per-relation breakdowns.
//!
//! All accumulators are mergeable, so shards can be scanned independently and
//! combined at the end with identical results.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonl;
use crate::motif::Relation;
use crate::validate::DatasetRecord;

pub const DEFAULT_BUCKETS: &[u64] = &[0, 200, 500, 1_000, 2_000, 5_000, 10_000];

/// Values kept verbatim before an accumulator switches to a histogram.
pub const EXACT_VALUES_LIMIT: usize = 1 << 20;
/// Histogram bins of width one cover lengths below this; longer values are
/// counted individually so the histogram stays exact.
pub const HISTOGRAM_SPAN: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
enum Storage {
    Values(Vec<u64>),
    Histogram {
        bins: Vec<u64>,
        overflow: BTreeMap<u64, u64>,
    },
}

/// Exact distribution of non-negative integer lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct LengthAccumulator {
    count: u64,
    sum: u128,
    sum_sq: u128,
    min: u64,
    max: u64,
    storage: Storage,
    exact_limit: usize,
}

impl Default for LengthAccumulator {
    fn default() -> Self {
        Self::with_exact_limit(EXACT_VALUES_LIMIT)
    }
}

impl LengthAccumulator {
    pub fn with_exact_limit(exact_limit: usize) -> Self {
        Self {
            count: 0,
            sum: 0,
            sum_sq: 0,
            min: u64::MAX,
            max: 0,
            storage: Storage::Values(Vec::new()),
            exact_limit,
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn is_histogram(&self) -> bool {
        matches!(self.storage, Storage::Histogram { .. })
    }

    fn add_n(&mut self, value: u64, n: u64) {
        self.count += n;
        self.sum += value as u128 * n as u128;
        self.sum_sq += (value as u128) * (value as u128) * n as u128;
        self.min = self.min.min(value);
        self.max = self.max.max(value);
        match &mut self.storage {
            Storage::Values(v) => v.extend(std::iter::repeat_n(value, n as usize)),
            Storage::Histogram { bins, overflow } => {
                if (value as usize) < HISTOGRAM_SPAN {
                    bins[value as usize] += n;
                } else {
                    *overflow.entry(value).or_default() += n;
                }
            }
        }
        self.maybe_spill();
    }

    pub fn push(&mut self, value: u64) {
        self.add_n(value, 1);
    }

    fn maybe_spill(&mut self) {
        if let Storage::Values(values) = &self.storage {
            if values.len() > self.exact_limit {
                let mut bins = vec![0u64; HISTOGRAM_SPAN];
                let mut overflow = BTreeMap::new();
                for &v in values {
                    if (v as usize) < HISTOGRAM_SPAN {
                        bins[v as usize] += 1;
                    } else {
                        *overflow.entry(v).or_default() += 1;
                    }
                }
                self.storage = Storage::Histogram { bins, overflow };
            }
        }
    }

    pub fn merge(&mut self, other: &LengthAccumulator) {
        match &other.storage {
            Storage::Values(values) => {
                for &v in values {
                    self.add_n(v, 1);
                }
            }
            Storage::Histogram { bins, overflow } => {
                for (v, &n) in bins.iter().enumerate().filter(|(_, n)| **n > 0) {
                    self.add_n(v as u64, n);
                }
                for (&v, &n) in overflow {
                    self.add_n(v, n);
                }
            }
        }
    }

    /// Value at 1-based `rank` in ascending order.
    fn value_at_rank(&self, rank: u64, sorted: Option<&[u64]>) -> u64 {
        match (&self.storage, sorted) {
            (Storage::Values(_), Some(sorted)) => sorted[(rank - 1) as usize],
            (Storage::Histogram { bins, overflow }, _) => {
                let mut seen = 0;
                for (v, &n) in bins.iter().enumerate() {
                    seen += n;
                    if seen >= rank {
                        return v as u64;
                    }
                }
                for (&v, &n) in overflow {
                    seen += n;
                    if seen >= rank {
                        return v;
                    }
                }
                self.max
            }
            (Storage::Values(_), None) => unreachable!("sorted values required"),
        }
    }

    pub fn finish(&self) -> LengthStats {
        if self.count == 0 {
            return LengthStats::default();
        }
        let n = self.count as u128;
        let mean = self.sum as f64 / self.count as f64;
        // population variance from exact integer moments
        let var_num = n * self.sum_sq - self.sum * self.sum;
        let std = ((var_num as f64) / (n as f64 * n as f64)).sqrt();
        let sorted = match &self.storage {
            Storage::Values(v) => {
                let mut s = v.clone();
                s.sort_unstable();
                Some(s)
            }
            Storage::Histogram { .. } => None,
        };
        let pct = |p: u64| {
            let rank = nearest_rank(p, self.count);
            self.value_at_rank(rank, sorted.as_deref()) as f64
        };
        LengthStats {
            count: self.count,
            mean: Some(mean),
            std: Some(std),
            min: Some(self.min as f64),
            max: Some(self.max as f64),
            p5: Some(pct(5)),
            p25: Some(pct(25)),
            p50: Some(pct(50)),
            p75: Some(pct(75)),
            p95: Some(pct(95)),
        }
    }
}

/// Nearest-rank: the smallest rank `r` with `r / n >= p / 100`, at least 1.
pub fn nearest_rank(percent: u64, n: u64) -> u64 {
    ((percent * n).div_ceil(100)).max(1)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LengthStats {
    pub count: u64,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub p5: Option<f64>,
    pub p25: Option<f64>,
    pub p50: Option<f64>,
    pub p75: Option<f64>,
    pub p95: Option<f64>,
}

/// Character and word statistics for question, answer and question+answer.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QaLengthStats {
    pub question_chars: LengthStats,
    pub question_words: LengthStats,
    pub answer_chars: LengthStats,
    pub answer_words: LengthStats,
    pub qa_chars: LengthStats,
    pub qa_words: LengthStats,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct QaAccumulator {
    question_chars: LengthAccumulator,
    question_words: LengthAccumulator,
    answer_chars: LengthAccumulator,
    answer_words: LengthAccumulator,
    qa_chars: LengthAccumulator,
    qa_words: LengthAccumulator,
}

impl QaAccumulator {
    fn push(&mut self, m: &RecordLengths) {
        self.question_chars.push(m.question_chars);
        self.question_words.push(m.question_words);
        self.answer_chars.push(m.answer_chars);
        self.answer_words.push(m.answer_words);
        self.qa_chars.push(m.question_chars + m.answer_chars);
        self.qa_words.push(m.question_words + m.answer_words);
    }

    fn merge(&mut self, o: &QaAccumulator) {
        self.question_chars.merge(&o.question_chars);
        self.question_words.merge(&o.question_words);
        self.answer_chars.merge(&o.answer_chars);
        self.answer_words.merge(&o.answer_words);
        self.qa_chars.merge(&o.qa_chars);
        self.qa_words.merge(&o.qa_words);
    }

    fn finish(&self) -> QaLengthStats {
        QaLengthStats {
            question_chars: self.question_chars.finish(),
            question_words: self.question_words.finish(),
            answer_chars: self.answer_chars.finish(),
            answer_words: self.answer_words.finish(),
            qa_chars: self.qa_chars.finish(),
            qa_words: self.qa_words.finish(),
        }
    }
}

/// Unicode scalar counts and whitespace-delimited word counts of one record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecordLengths {
    pub question_chars: u64,
    pub question_words: u64,
    pub answer_chars: u64,
    pub answer_words: u64,
}

impl RecordLengths {
    pub fn of(question: &str, answer: &str) -> Self {
        Self {
            question_chars: question.chars().count() as u64,
            question_words: question.split_whitespace().count() as u64,
            answer_chars: answer.chars().count() as u64,
            answer_words: answer.split_whitespace().count() as u64,
        }
    }

    pub fn qa_chars(&self) -> u64 {
        self.question_chars + self.answer_chars
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub lo: u64,
    /// Exclusive upper bound; `None` for the last, unbounded bucket.
    pub hi: Option<u64>,
    pub count: u64,
    pub percent: f64,
}

/// Counts of lengths in half-open buckets `[lo, hi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketTable {
    pub total: u64,
    pub buckets: Vec<Bucket>,
}

fn check_boundaries(boundaries: &[u64]) -> Result<()> {
    if boundaries.first() != Some(&0) {
        return Err(Error::precondition("bucket boundaries must start at 0"));
    }
    if boundaries.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::precondition(
            "bucket boundaries must be strictly ascending",
        ));
    }
    Ok(())
}

/// Index of the bucket `[boundaries[i], boundaries[i + 1])` holding `len`.
fn bucket_index(boundaries: &[u64], len: u64) -> usize {
    boundaries.partition_point(|&b| b <= len) - 1
}

#[derive(Debug, Clone, PartialEq)]
struct BucketCounter {
    boundaries: Vec<u64>,
    counts: Vec<u64>,
}

impl BucketCounter {
    fn new(boundaries: &[u64]) -> Self {
        Self {
            boundaries: boundaries.to_vec(),
            counts: vec![0; boundaries.len()],
        }
    }

    fn push(&mut self, len: u64) {
        self.counts[bucket_index(&self.boundaries, len)] += 1;
    }

    fn merge(&mut self, o: &BucketCounter) {
        for (c, oc) in self.counts.iter_mut().zip(&o.counts) {
            *c += oc;
        }
    }

    fn finish(&self) -> BucketTable {
        let total: u64 = self.counts.iter().sum();
        let buckets = self
            .counts
            .iter()
            .enumerate()
            .map(|(i, &count)| Bucket {
                lo: self.boundaries[i],
                hi: self.boundaries.get(i + 1).copied(),
                count,
                percent: if total == 0 {
                    0.0
                } else {
                    100.0 * count as f64 / total as f64
                },
            })
            .collect();
        BucketTable { total, buckets }
    }
}

/// Buckets an arbitrary stream of lengths.
pub fn bucket_lengths<I>(lengths: I, boundaries: &[u64]) -> Result<BucketTable>
where
    I: IntoIterator<Item = u64>,
{
    check_boundaries(boundaries)?;
    let mut counter = BucketCounter::new(boundaries);
    for len in lengths {
        counter.push(len);
    }
    Ok(counter.finish())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketTables {
    /// Question plus answer characters.
    pub qa: BucketTable,
    pub answer: BucketTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionEntry {
    pub count: u64,
    pub proportion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub overall: QaLengthStats,
    pub by_relation: BTreeMap<Relation, QaLengthStats>,
    pub buckets: BucketTables,
    pub composition: BTreeMap<Relation, CompositionEntry>,
    pub malformed_records: u64,
}

/// Mergeable accumulator behind [`compute_stats`].
#[derive(Debug, Clone, PartialEq)]
pub struct StatsAccumulator {
    overall: QaAccumulator,
    by_relation: BTreeMap<Relation, QaAccumulator>,
    qa_buckets: BucketCounter,
    answer_buckets: BucketCounter,
    malformed: u64,
}

impl StatsAccumulator {
    pub fn new(boundaries: &[u64]) -> Result<Self> {
        check_boundaries(boundaries)?;
        Ok(Self {
            overall: QaAccumulator::default(),
            by_relation: BTreeMap::new(),
            qa_buckets: BucketCounter::new(boundaries),
            answer_buckets: BucketCounter::new(boundaries),
            malformed: 0,
        })
    }

    pub fn push_lengths(&mut self, relation: Relation, lengths: &RecordLengths) {
        self.overall.push(lengths);
        self.by_relation.entry(relation).or_default().push(lengths);
        self.qa_buckets.push(lengths.qa_chars());
        self.answer_buckets.push(lengths.answer_chars);
    }

    pub fn push(&mut self, record: &DatasetRecord) {
        let lengths = RecordLengths::of(&record.question, &record.answer);
        self.push_lengths(record.relation, &lengths);
    }

    pub fn add_malformed(&mut self, n: u64) {
        self.malformed += n;
    }

    pub fn merge(mut self, other: StatsAccumulator) -> Self {
        self.overall.merge(&other.overall);
        for (rel, acc) in &other.by_relation {
            self.by_relation.entry(*rel).or_default().merge(acc);
        }
        self.qa_buckets.merge(&other.qa_buckets);
        self.answer_buckets.merge(&other.answer_buckets);
        self.malformed += other.malformed;
        self
    }

    pub fn finish(&self) -> StatsReport {
        let total = self.overall.qa_chars.count();
        let composition = self
            .by_relation
            .iter()
            .map(|(rel, acc)| {
                let count = acc.qa_chars.count();
                (
                    *rel,
                    CompositionEntry {
                        count,
                        proportion: if total == 0 {
                            0.0
                        } else {
                            count as f64 / total as f64
                        },
                    },
                )
            })
            .collect();
        StatsReport {
            overall: self.overall.finish(),
            by_relation: self
                .by_relation
                .iter()
                .map(|(rel, acc)| (*rel, acc.finish()))
                .collect(),
            buckets: BucketTables {
                qa: self.qa_buckets.finish(),
                answer: self.answer_buckets.finish(),
            },
            composition,
            malformed_records: self.malformed,
        }
    }
}

pub fn compute_stats<'a, I>(records: I, boundaries: &[u64]) -> Result<StatsReport>
where
    I: IntoIterator<Item = &'a DatasetRecord>,
{
    let mut acc = StatsAccumulator::new(boundaries)?;
    for r in records {
        acc.push(r);
    }
    Ok(acc.finish())
}

/// Same result as [`compute_stats`], scanned in parallel shards and merged.
pub fn compute_stats_sharded(
    records: &[DatasetRecord],
    boundaries: &[u64],
    shards: usize,
) -> Result<StatsReport> {
    let shard_len = records.len().div_ceil(shards.max(1)).max(1);
    let empty = StatsAccumulator::new(boundaries)?;
    let merged = records
        .par_chunks(shard_len)
        .map(|chunk| {
            let mut acc = empty.clone();
            chunk.iter().for_each(|r| acc.push(r));
            acc
        })
        .reduce(|| empty.clone(), StatsAccumulator::merge);
    Ok(merged.finish())
}

/// Reads a dataset file, counting unparseable lines as malformed.
pub fn compute_stats_file(path: &Path, boundaries: &[u64]) -> Result<StatsReport> {
    let (records, bad): (Vec<DatasetRecord>, u64) = jsonl::read_lenient(path)?;
    let mut acc = StatsAccumulator::new(boundaries)?;
    records.iter().for_each(|r| acc.push(r));
    acc.add_malformed(bad);
    Ok(acc.finish())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Table,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "table" => Ok(ReportFormat::Table),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

fn cell(v: Option<f64>) -> String {
    match v {
        None => "-".into(),
        Some(x) if x.fract() == 0.0 => format!("{x:.0}"),
        Some(x) => format!("{x:.1}"),
    }
}

fn stats_rows(out: &mut String, label: &str, s: &QaLengthStats) {
    let rows = [
        ("question chars", &s.question_chars),
        ("answer chars", &s.answer_chars),
        ("qa chars", &s.qa_chars),
        ("question words", &s.question_words),
        ("answer words", &s.answer_words),
        ("qa words", &s.qa_words),
    ];
    let _ = writeln!(out, "{label}");
    let _ = writeln!(
        out,
        "  {:<16}{:>10}{:>10}{:>10}{:>8}{:>8}{:>8}{:>8}{:>8}{:>8}{:>8}",
        "field", "count", "mean", "std", "min", "p5", "p25", "p50", "p75", "p95", "max"
    );
    for (name, st) in rows {
        let _ = writeln!(
            out,
            "  {:<16}{:>10}{:>10}{:>10}{:>8}{:>8}{:>8}{:>8}{:>8}{:>8}{:>8}",
            name,
            st.count,
            cell(st.mean),
            cell(st.std),
            cell(st.min),
            cell(st.p5),
            cell(st.p25),
            cell(st.p50),
            cell(st.p75),
            cell(st.p95),
            cell(st.max)
        );
    }
}

fn bucket_label(b: &Bucket) -> String {
    match b.hi {
        Some(hi) => format!("[{}, {})", b.lo, hi),
        None => format!("[{}, inf)", b.lo),
    }
}

pub fn render_report(report: &StatsReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            serde_json::to_string_pretty(report).expect("stats report serializes")
        }
        ReportFormat::Table => {
            let mut out = String::new();
            let _ = writeln!(out, "composition");
            for (rel, c) in &report.composition {
                let _ = writeln!(
                    out,
                    "  {:<16}{:>12}{:>9.1}%",
                    rel.as_str(),
                    c.count,
                    100.0 * c.proportion
                );
            }
            let _ = writeln!(
                out,
                "  {:<16}{:>12}\n",
                "total", report.overall.qa_chars.count
            );
            stats_rows(&mut out, "overall", &report.overall);
            for (rel, s) in &report.by_relation {
                out.push('\n');
                stats_rows(&mut out, rel.as_str(), s);
            }
            let _ = writeln!(out, "\nbuckets (chars){:>21}{:>20}", "qa", "answer");
            for (q, a) in report
                .buckets
                .qa
                .buckets
                .iter()
                .zip(&report.buckets.answer.buckets)
            {
                let _ = writeln!(
                    out,
                    "  {:<18}{:>10}{:>7.1}%{:>12}{:>7.1}%",
                    bucket_label(q),
                    q.count,
                    q.percent,
                    a.count,
                    a.percent
                );
            }
            if report.malformed_records > 0 {
                let _ = writeln!(
                    out,
                    "\nmalformed records skipped: {}",
                    report.malformed_records
                );
            }
            out
        }
    }
}
