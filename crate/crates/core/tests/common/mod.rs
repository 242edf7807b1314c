#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use linksynth::{build_graph, DocId, Document, LinkGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

pub fn doc(id: DocId, title: &str, text: &str, links: &[&str]) -> Document {
    Document {
        doc_id: id,
        title: title.into(),
        text: text.into(),
        links: links.iter().map(|s| s.to_string()).collect(),
    }
}

/// Graph over vertices `v0..v{n-1}` with exactly the given directed edges.
pub fn graph_from_edges(n: usize, edges: &[(u32, u32)]) -> LinkGraph {
    let docs: Vec<Document> = (0..n)
        .map(|i| Document {
            doc_id: i as DocId,
            title: format!("v{i}"),
            text: format!("text of v{i}"),
            links: edges
                .iter()
                .filter(|(u, _)| *u as usize == i)
                .map(|(_, v)| format!("v{v}"))
                .collect(),
        })
        .collect();
    build_graph(&docs).expect("graph builds")
}

/// Erdos-Renyi style directed graph without self-loops, plus its adjacency matrix.
pub fn random_graph(seed: u64, n: usize, p: f64) -> (LinkGraph, Vec<Vec<bool>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adj = vec![vec![false; n]; n];
    let mut edges = Vec::new();
    for (u, row) in adj.iter_mut().enumerate() {
        for (v, cell) in row.iter_mut().enumerate() {
            if u != v && rng.gen_bool(p) {
                *cell = true;
                edges.push((u as u32, v as u32));
            }
        }
    }
    (graph_from_edges(n, &edges), adj)
}

pub fn key(a: usize, b: usize) -> (u32, u32) {
    (a.min(b) as u32, a.max(b) as u32)
}

/// O(V^2) scan over unordered pairs.
pub fn oracle_dual(adj: &[Vec<bool>]) -> BTreeSet<(u32, u32)> {
    let n = adj.len();
    let mut out = BTreeSet::new();
    for (a, row) in adj.iter().enumerate() {
        for b in a + 1..n {
            if row[b] && adj[b][a] {
                out.insert(key(a, b));
            }
        }
    }
    out
}

pub fn in_degree(adj: &[Vec<bool>], v: usize) -> usize {
    adj.iter().filter(|row| row[v]).count()
}

/// O(V^3) scan over ordered (u, v, hub) triples. Maps each canonical pair key
/// to every qualifying hub.
pub fn oracle_co_mention(adj: &[Vec<bool>], cap: usize) -> BTreeMap<(u32, u32), BTreeSet<u32>> {
    let n = adj.len();
    let mut out: BTreeMap<(u32, u32), BTreeSet<u32>> = BTreeMap::new();
    for u in 0..n {
        for v in 0..n {
            if u == v || !adj[u][v] {
                continue;
            }
            for e in 0..n {
                if e == u || e == v {
                    continue;
                }
                if adj[u][e] && adj[v][e] && in_degree(adj, e) <= cap {
                    out.entry(key(u, v)).or_default().insert(e as u32);
                }
            }
        }
    }
    out
}

/// Exhaustive pass@k: fraction of k-subsets of n samples (c correct) that hold
/// at least one correct sample. Samples 0..c are the correct ones.
pub fn pass_at_k_by_enumeration(n: u32, c: u32, k: u32) -> f64 {
    let mut hit = 0u64;
    let mut total = 0u64;
    for mask in 0u32..(1u32 << n) {
        if mask.count_ones() != k {
            continue;
        }
        total += 1;
        if mask & ((1u32 << c) - 1) != 0 {
            hit += 1;
        }
    }
    hit as f64 / total as f64
}

/// Nearest-rank percentile over an unsorted sample.
pub fn nearest_rank_oracle(values: &[u64], p: f64) -> u64 {
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let n = sorted.len() as f64;
    let rank = ((p / 100.0) * n).ceil().max(1.0) as usize;
    sorted[rank - 1]
}

/// Copies the e2e config and corpus into a fresh directory; returns the dir and config path.
pub fn e2e_workspace() -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().expect("tempdir");
    for name in ["e2e.toml", "mini_corpus.jsonl"] {
        std::fs::copy(fixture(name), dir.path().join(name)).expect("copy fixture");
    }
    let cfg = dir.path().join("e2e.toml");
    (dir, cfg)
}

/// Runs the `pipeline` subcommand of the built binary.
pub fn run_pipeline_bin(
    bin: &str,
    config: &std::path::Path,
    extra: &[&str],
) -> std::process::Output {
    std::process::Command::new(bin)
        .arg("pipeline")
        .arg("--config")
        .arg(config)
        .args(extra)
        .env_remove("SYNTH_ENDPOINT")
        .env_remove("SYNTH_TOKEN")
        .output()
        .expect("binary runs")
}

pub fn raw_pair_keys(path: &std::path::Path) -> BTreeSet<String> {
    linksynth::synthesis::read_records(path)
        .expect("raw records")
        .iter()
        .map(|r| r.pair().key().to_string())
        .collect()
}
