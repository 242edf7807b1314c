//! Directed document graph in compressed adjacency form.
//!
//! `offsets` has one entry per vertex plus a terminator; vertex `v`'s
//! out-neighbors are `targets[offsets[v]..offsets[v + 1]]`, sorted and
//! deduplicated, with no self-loops.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{DocId, Document};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"LSGRAPH\0";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphStats {
    pub vertices: u64,
    pub edges: u64,
    pub dangling_links_dropped: u64,
    /// Unordered pairs with an edge in both directions.
    pub mutual_edge_count: u64,
    pub max_out_degree: u64,
    pub max_in_degree: u64,
    pub duplicate_titles: u64,
    pub self_loops_removed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkGraph {
    offsets: Vec<u64>,
    targets: Vec<DocId>,
    titles: Vec<String>,
    title_index: HashMap<String, DocId>,
    stats: GraphStats,
}

/// Accumulates documents one at a time; edges are resolved in [`GraphBuilder::finish`]
/// once every title is known.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    titles: Vec<String>,
    links: Vec<Vec<String>>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, doc: &Document) -> Result<()> {
        if doc.doc_id as usize != self.titles.len() {
            return Err(Error::precondition(format!(
                "expected doc_id {}, got {}",
                self.titles.len(),
                doc.doc_id
            )));
        }
        if self.titles.len() >= DocId::MAX as usize {
            return Err(Error::precondition("too many documents for 32-bit ids"));
        }
        self.titles.push(doc.title.clone());
        self.links.push(doc.links.clone());
        Ok(())
    }

    pub fn finish(self) -> LinkGraph {
        let vertex_count = self.titles.len();
        let mut stats = GraphStats {
            vertices: vertex_count as u64,
            ..GraphStats::default()
        };

        let mut title_index: HashMap<String, DocId> = HashMap::with_capacity(vertex_count);
        // owner[v] is the vertex that receives v's edges (itself unless v is a duplicate title)
        let mut owner: Vec<DocId> = Vec::with_capacity(vertex_count);
        for (id, title) in self.titles.iter().enumerate() {
            match title_index.get(title) {
                Some(&first) => {
                    stats.duplicate_titles += 1;
                    owner.push(first);
                }
                None => {
                    title_index.insert(title.clone(), id as DocId);
                    owner.push(id as DocId);
                }
            }
        }

        let mut adjacency: Vec<Vec<DocId>> = vec![Vec::new(); vertex_count];
        for (id, links) in self.links.into_iter().enumerate() {
            let src = owner[id];
            for link in links {
                match title_index.get(&link) {
                    Some(&dst) if dst == src => stats.self_loops_removed += 1,
                    Some(&dst) => adjacency[src as usize].push(dst),
                    None => stats.dangling_links_dropped += 1,
                }
            }
        }

        let mut offsets = Vec::with_capacity(vertex_count + 1);
        let mut targets = Vec::new();
        offsets.push(0u64);
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
            targets.extend_from_slice(list);
            offsets.push(targets.len() as u64);
        }

        let mut graph = LinkGraph {
            offsets,
            targets,
            titles: self.titles,
            title_index,
            stats,
        };
        graph.stats = graph.compute_stats(stats);
        graph
    }
}

/// Builds the graph over a slice of documents with dense ids.
pub fn build_graph(documents: &[Document]) -> Result<LinkGraph> {
    let mut builder = GraphBuilder::new();
    for doc in documents {
        builder.push(doc)?;
    }
    Ok(builder.finish())
}

impl LinkGraph {
    pub fn vertex_count(&self) -> usize {
        self.titles.len()
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    pub fn stats(&self) -> &GraphStats {
        &self.stats
    }

    pub fn offsets(&self) -> &[u64] {
        &self.offsets
    }

    pub fn targets(&self) -> &[DocId] {
        &self.targets
    }

    pub fn title(&self, v: DocId) -> Option<&str> {
        self.titles.get(v as usize).map(String::as_str)
    }

    pub fn titles(&self) -> &[String] {
        &self.titles
    }

    pub fn lookup(&self, title: &str) -> Option<DocId> {
        self.title_index.get(title).copied()
    }

    fn check(&self, v: DocId) -> Result<()> {
        if (v as usize) < self.vertex_count() {
            Ok(())
        } else {
            Err(Error::precondition(format!(
                "vertex {v} out of range (vertex_count = {})",
                self.vertex_count()
            )))
        }
    }

    /// Sorted out-neighbor slice of `v`.
    pub fn out_neighbors(&self, v: DocId) -> Result<&[DocId]> {
        self.check(v)?;
        Ok(self.neighbors(v))
    }

    /// Unchecked variant for hot loops over known-valid ids.
    #[inline]
    pub(crate) fn neighbors(&self, v: DocId) -> &[DocId] {
        let v = v as usize;
        &self.targets[self.offsets[v] as usize..self.offsets[v + 1] as usize]
    }

    pub fn has_edge(&self, u: DocId, v: DocId) -> Result<bool> {
        self.check(u)?;
        self.check(v)?;
        Ok(self.contains(u, v))
    }

    #[inline]
    pub(crate) fn contains(&self, u: DocId, v: DocId) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// In-degree of every vertex, computed in one pass over the targets.
    pub fn in_degrees(&self) -> Vec<u32> {
        let mut deg = vec![0u32; self.vertex_count()];
        for &t in &self.targets {
            deg[t as usize] += 1;
        }
        deg
    }

    /// Recomputes the structural counters, keeping the build-time ones from `base`.
    fn compute_stats(&self, base: GraphStats) -> GraphStats {
        let mut stats = base;
        stats.vertices = self.vertex_count() as u64;
        stats.edges = self.edge_count() as u64;
        stats.max_out_degree = (0..self.vertex_count())
            .map(|v| self.neighbors(v as DocId).len() as u64)
            .max()
            .unwrap_or(0);
        stats.max_in_degree = self.in_degrees().into_iter().max().unwrap_or(0) as u64;
        stats.mutual_edge_count = (0..self.vertex_count() as DocId)
            .map(|u| {
                self.neighbors(u)
                    .iter()
                    .filter(|&&v| v > u && self.contains(v, u))
                    .count() as u64
            })
            .sum();
        stats
    }

    /// Serializes to the binary graph format.
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(self.vertex_count() as u64).to_le_bytes())?;
        w.write_all(&(self.edge_count() as u64).to_le_bytes())?;
        for &o in &self.offsets {
            w.write_all(&o.to_le_bytes())?;
        }
        for &t in &self.targets {
            w.write_all(&t.to_le_bytes())?;
        }
        for title in &self.titles {
            w.write_all(&(title.len() as u32).to_le_bytes())?;
            w.write_all(title.as_bytes())?;
        }
        let stats = serde_json::to_vec(&self.stats).expect("stats serialize");
        w.write_all(&(stats.len() as u32).to_le_bytes())?;
        w.write_all(&stats)?;
        w.flush()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)
            .expect("writing to a Vec cannot fail");
        buf
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)
                .map_err(|e| Error::io_path("cannot create", parent, e))?;
        }
        let file =
            std::fs::File::create(path).map_err(|e| Error::io_path("cannot create", path, e))?;
        self.write_to(std::io::BufWriter::new(file))
            .map_err(|e| Error::io_path("cannot write", path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io_path("cannot read", path, e))?;
        Self::from_bytes(&bytes)
    }

    /// Parses the binary format and re-checks every structural invariant.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::GraphFormat("bad magic header".into()));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::GraphFormat(format!("unsupported version {version}")));
        }
        let vertex_count = usize::try_from(r.u64()?)
            .map_err(|_| Error::GraphFormat("vertex count overflow".into()))?;
        let edge_count = usize::try_from(r.u64()?)
            .map_err(|_| Error::GraphFormat("edge count overflow".into()))?;
        if vertex_count > DocId::MAX as usize || vertex_count.saturating_add(1) * 8 > bytes.len() {
            return Err(Error::GraphFormat("vertex count exceeds file size".into()));
        }
        let offsets = (0..=vertex_count)
            .map(|_| r.u64())
            .collect::<Result<Vec<_>>>()?;
        if edge_count.saturating_mul(4) > bytes.len() {
            return Err(Error::GraphFormat("edge count exceeds file size".into()));
        }
        let targets = (0..edge_count)
            .map(|_| r.u32())
            .collect::<Result<Vec<_>>>()?;
        let mut titles = Vec::with_capacity(vertex_count);
        for _ in 0..vertex_count {
            let len = r.u32()? as usize;
            let raw = r.take(len)?;
            let title = std::str::from_utf8(raw)
                .map_err(|_| Error::GraphFormat("title is not UTF-8".into()))?;
            titles.push(title.to_string());
        }
        let stats_len = r.u32()? as usize;
        let stats: GraphStats = serde_json::from_slice(r.take(stats_len)?)
            .map_err(|e| Error::GraphFormat(format!("bad stats block: {e}")))?;
        if r.pos != bytes.len() {
            return Err(Error::GraphFormat("trailing bytes".into()));
        }

        validate_structure(&offsets, &targets, vertex_count)?;
        let mut title_index = HashMap::with_capacity(vertex_count);
        for (id, title) in titles.iter().enumerate() {
            title_index.entry(title.clone()).or_insert(id as DocId);
        }
        Ok(LinkGraph {
            offsets,
            targets,
            titles,
            title_index,
            stats,
        })
    }
}

fn validate_structure(offsets: &[u64], targets: &[DocId], vertex_count: usize) -> Result<()> {
    let bad = |msg: &str| Err(Error::GraphFormat(msg.to_string()));
    if offsets.first() != Some(&0) || offsets.last() != Some(&(targets.len() as u64)) {
        return bad("offsets must start at 0 and end at the edge count");
    }
    for v in 0..vertex_count {
        let (lo, hi) = (offsets[v], offsets[v + 1]);
        if lo > hi {
            return bad("offsets must be nondecreasing");
        }
        let slice = &targets[lo as usize..hi as usize];
        if slice.windows(2).any(|w| w[0] >= w[1]) {
            return bad("neighbor lists must be strictly increasing");
        }
        if slice
            .iter()
            .any(|&t| t as usize == v || t as usize >= vertex_count)
        {
            return bad("self-loop or out-of-range target");
        }
    }
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::GraphFormat("unexpected end of file".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
