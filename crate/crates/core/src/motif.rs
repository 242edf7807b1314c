//! Relation discovery over the link graph.
//!
//! Two motifs are enumerated:
//!
//! * **dual-link**: `a -> b` and `b -> a`, reported once per unordered pair with `a < b`;
//! * **co-mention**: `a -> hub`, `b -> hub` and `a -> b`, oriented along the direct edge.
//!
//! Co-mention hubs are found by a sorted-merge intersection of the two endpoints'
//! out-neighbor lists, so the work is proportional to edges times average degree.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::DocId;
use crate::error::{Error, Result};
use crate::graph::LinkGraph;
use crate::jsonl;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    DualLink,
    CoMention,
}

impl Relation {
    pub fn as_str(self) -> &'static str {
        match self {
            Relation::DualLink => "dual_link",
            Relation::CoMention => "co_mention",
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Unordered identity of a document pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairKey(pub DocId, pub DocId);

impl PairKey {
    pub fn new(a: DocId, b: DocId) -> Self {
        if a <= b {
            PairKey(a, b)
        } else {
            PairKey(b, a)
        }
    }
}

impl fmt::Display for PairKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.0, self.1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MotifPair {
    pub a: DocId,
    pub b: DocId,
    pub relation: Relation,
    pub hub: Option<DocId>,
}

impl MotifPair {
    pub fn key(&self) -> PairKey {
        PairKey::new(self.a, self.b)
    }

    /// Re-checks the motif definition against `graph`.
    pub fn holds_in(&self, graph: &LinkGraph) -> bool {
        let n = graph.vertex_count() as DocId;
        if self.a == self.b || self.a >= n || self.b >= n {
            return false;
        }
        match (self.relation, self.hub) {
            (Relation::DualLink, None) => {
                self.a < self.b && graph.contains(self.a, self.b) && graph.contains(self.b, self.a)
            }
            (Relation::CoMention, Some(hub)) => {
                hub < n
                    && hub != self.a
                    && hub != self.b
                    && graph.contains(self.a, hub)
                    && graph.contains(self.b, hub)
                    && graph.contains(self.a, self.b)
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiscoveryConfig {
    /// Hubs referenced by more sources than this are ignored.
    pub hub_in_degree_cap: u32,
    pub max_pairs: Option<u64>,
    /// Emit one pair per qualifying hub instead of one witness per pair.
    pub emit_all_hubs: bool,
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        Self {
            hub_in_degree_cap: 10_000,
            max_pairs: None,
            emit_all_hubs: false,
        }
    }
}

impl DiscoveryConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hub_in_degree_cap < 2 {
            return Err(Error::Config(format!(
                "hub_in_degree_cap must be at least 2, got {}",
                self.hub_in_degree_cap
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscoveryReport {
    pub dual_link_pairs: u64,
    pub co_mention_pairs: u64,
    pub pairs_suppressed_by_dedup: u64,
    pub hubs_skipped_by_cap: u64,
    pub pairs_dropped_by_limit: u64,
}

/// All mutually linked pairs, ascending by `(a, b)` with `a < b`.
pub fn discover_dual_links(graph: &LinkGraph) -> Vec<MotifPair> {
    (0..graph.vertex_count() as DocId)
        .into_par_iter()
        .flat_map_iter(|a| {
            graph
                .neighbors(a)
                .iter()
                .copied()
                .filter(move |&b| b > a && graph.contains(b, a))
                .map(move |b| MotifPair {
                    a,
                    b,
                    relation: Relation::DualLink,
                    hub: None,
                })
        })
        .collect()
}

/// Calls `f` on each common element of two sorted slices, stopping when it returns false.
fn for_each_common(xs: &[DocId], ys: &[DocId], mut f: impl FnMut(DocId) -> bool) {
    let (mut i, mut j) = (0, 0);
    while i < xs.len() && j < ys.len() {
        match xs[i].cmp(&ys[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                if !f(xs[i]) {
                    return;
                }
                i += 1;
                j += 1;
            }
        }
    }
}

/// Co-mention pairs in ascending scan order over directed edges `a -> b`.
pub fn discover_co_mentions(
    graph: &LinkGraph,
    config: &DiscoveryConfig,
) -> Result<(Vec<MotifPair>, DiscoveryReport)> {
    config.validate()?;
    let in_deg = graph.in_degrees();
    let capped: Vec<bool> = in_deg
        .iter()
        .map(|&d| d > config.hub_in_degree_cap)
        .collect();
    let hubs_skipped = capped.iter().filter(|&&c| c).count() as u64;
    let emit_all = config.emit_all_hubs;

    let pairs: Vec<MotifPair> = (0..graph.vertex_count() as DocId)
        .into_par_iter()
        .flat_map_iter(|a| {
            let mut local = Vec::new();
            let out_a = graph.neighbors(a);
            for &b in out_a {
                // A mutual edge was already judged when the scan visited b -> a;
                // the hub condition is symmetric in (a, b).
                if b < a && graph.contains(b, a) {
                    continue;
                }
                for_each_common(out_a, graph.neighbors(b), |hub| {
                    if hub == a || hub == b || capped[hub as usize] {
                        return true;
                    }
                    local.push(MotifPair {
                        a,
                        b,
                        relation: Relation::CoMention,
                        hub: Some(hub),
                    });
                    emit_all
                });
            }
            local.into_iter()
        })
        .collect();

    let report = DiscoveryReport {
        co_mention_pairs: pairs.len() as u64,
        hubs_skipped_by_cap: hubs_skipped,
        ..DiscoveryReport::default()
    };
    Ok((pairs, report))
}

/// Drops co-mention pairs whose unordered key is already a dual-link pair and
/// appends the survivors after the dual-link stream.
pub fn dedup_motifs(
    dual: Vec<MotifPair>,
    co_mention: Vec<MotifPair>,
) -> (Vec<MotifPair>, DiscoveryReport) {
    let dual_keys: HashSet<PairKey> = dual.iter().map(MotifPair::key).collect();
    let mut report = DiscoveryReport {
        dual_link_pairs: dual.len() as u64,
        ..DiscoveryReport::default()
    };
    let mut combined = dual;
    for pair in co_mention {
        if dual_keys.contains(&pair.key()) {
            report.pairs_suppressed_by_dedup += 1;
        } else {
            report.co_mention_pairs += 1;
            combined.push(pair);
        }
    }
    (combined, report)
}

/// Full discovery: both motifs, cross-motif dedup, then the optional global cap.
pub fn discover(
    graph: &LinkGraph,
    config: &DiscoveryConfig,
) -> Result<(Vec<MotifPair>, DiscoveryReport)> {
    let dual = discover_dual_links(graph);
    let (co, co_report) = discover_co_mentions(graph, config)?;
    let (mut combined, mut report) = dedup_motifs(dual, co);
    report.hubs_skipped_by_cap = co_report.hubs_skipped_by_cap;
    if let Some(limit) = config.max_pairs {
        let limit = usize::try_from(limit).unwrap_or(usize::MAX);
        if combined.len() > limit {
            let dropped = &combined[limit..];
            report.pairs_dropped_by_limit = dropped.len() as u64;
            let dropped_dual = dropped
                .iter()
                .filter(|p| p.relation == Relation::DualLink)
                .count() as u64;
            report.dual_link_pairs -= dropped_dual;
            report.co_mention_pairs -= dropped.len() as u64 - dropped_dual;
            combined.truncate(limit);
        }
    }
    Ok((combined, report))
}

/// On-disk pair record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRecord {
    pub a: DocId,
    pub b: DocId,
    pub relation: Relation,
    pub hub: Option<DocId>,
    pub a_title: String,
    pub b_title: String,
}

impl PairRecord {
    pub fn from_pair(pair: &MotifPair, graph: &LinkGraph) -> Self {
        Self {
            a: pair.a,
            b: pair.b,
            relation: pair.relation,
            hub: pair.hub,
            a_title: graph.title(pair.a).unwrap_or_default().to_string(),
            b_title: graph.title(pair.b).unwrap_or_default().to_string(),
        }
    }

    pub fn pair(&self) -> MotifPair {
        MotifPair {
            a: self.a,
            b: self.b,
            relation: self.relation,
            hub: self.hub,
        }
    }
}

pub fn write_pairs(path: &Path, pairs: &[MotifPair], graph: &LinkGraph) -> Result<()> {
    let records: Vec<PairRecord> = pairs
        .iter()
        .map(|p| PairRecord::from_pair(p, graph))
        .collect();
    jsonl::write_all(path, &records)
}

pub fn read_pairs(path: &Path) -> Result<Vec<PairRecord>> {
    jsonl::read_all(path)
}
