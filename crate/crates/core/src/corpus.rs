//! Corpus ingest: stream line-delimited JSON pages, pull out intra-corpus
//! link targets, and emit [`Document`] records with dense ids.

use std::collections::HashSet;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonl;

pub type DocId = u32;

/// Namespace prefixes dropped by default when extracting links.
pub const DEFAULT_NAMESPACE_BLACKLIST: &[&str] = &[
    "File:",
    "Image:",
    "Category:",
    "Wikipedia:",
    "Template:",
    "Help:",
    "Portal:",
    "Special:",
];

pub const DEFAULT_MAX_DOC_BYTES: usize = 2 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: DocId,
    pub title: String,
    pub text: String,
    pub links: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub documents_read: u64,
    pub documents_emitted: u64,
    pub links_extracted: u64,
    pub links_dropped: u64,
    pub bytes_read: u64,
    pub documents_truncated: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestConfig {
    pub namespace_blacklist: Vec<String>,
    pub max_doc_bytes: usize,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            namespace_blacklist: DEFAULT_NAMESPACE_BLACKLIST
                .iter()
                .map(|s| s.to_string())
                .collect(),
            max_doc_bytes: DEFAULT_MAX_DOC_BYTES,
        }
    }
}

/// Canonical title form: underscores become spaces, whitespace runs collapse
/// to one space, the ends are trimmed and the first character is uppercased.
pub fn normalize_title(raw: &str) -> Result<String> {
    let mut out = String::with_capacity(raw.len());
    let mut pending_space = false;
    for ch in raw.chars() {
        if ch == '_' || ch.is_whitespace() {
            pending_space = !out.is_empty();
            continue;
        }
        if pending_space {
            out.push(' ');
            pending_space = false;
        }
        if out.is_empty() {
            out.extend(ch.to_uppercase());
        } else {
            out.push(ch);
        }
    }
    if out.is_empty() {
        Err(Error::EmptyTitle)
    } else {
        Ok(out)
    }
}

/// Result of scanning one body of wikitext.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExtractedLinks {
    pub targets: Vec<String>,
    /// Targets rejected by the namespace filter or empty after normalization.
    pub dropped: u64,
}

/// Link extractor configured with a namespace blacklist.
#[derive(Debug, Clone)]
pub struct LinkExtractor {
    blacklist: Vec<String>,
}

impl Default for LinkExtractor {
    fn default() -> Self {
        Self::new(DEFAULT_NAMESPACE_BLACKLIST.iter().copied())
    }
}

impl LinkExtractor {
    pub fn new<I, S>(blacklist: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            blacklist: blacklist
                .into_iter()
                .map(|s| s.as_ref().trim().to_lowercase())
                .filter(|s| !s.is_empty())
                .collect(),
        }
    }

    fn is_excluded(&self, target: &str) -> bool {
        let lower = target.to_lowercase();
        if self
            .blacklist
            .iter()
            .any(|ns| lower.starts_with(ns.as_str()))
        {
            return true;
        }
        // Interlanguage links: a two-letter lowercase code followed by ':'.
        let bytes = target.as_bytes();
        bytes.len() >= 3
            && bytes[0].is_ascii_lowercase()
            && bytes[1].is_ascii_lowercase()
            && bytes[2] == b':'
    }

    /// Extracts canonical link targets from `[[...]]` markup in first-occurrence order.
    pub fn extract(&self, wikitext: &str) -> ExtractedLinks {
        let mut result = ExtractedLinks::default();
        let mut seen = HashSet::new();
        for inner in bracket_contents(wikitext) {
            let target = inner.split('|').next().unwrap_or_default();
            let target = target.split('#').next().unwrap_or_default().trim();
            let target = target.strip_prefix(':').unwrap_or(target).trim_start();
            if target.is_empty() || self.is_excluded(target) {
                result.dropped += 1;
                continue;
            }
            match normalize_title(target) {
                Ok(title) => {
                    if seen.insert(title.clone()) {
                        result.targets.push(title);
                    }
                }
                Err(_) => result.dropped += 1,
            }
        }
        result
    }
}

/// Convenience wrapper using the default blacklist.
pub fn extract_links(wikitext: &str) -> Vec<String> {
    LinkExtractor::default().extract(wikitext).targets
}

/// Yields the text between each innermost `[[` and its closing `]]`.
/// An unclosed `[[` ends the scan.
fn bracket_contents(text: &str) -> impl Iterator<Item = &str> {
    let mut rest = text;
    std::iter::from_fn(move || loop {
        let open = rest.find("[[")?;
        let body = &rest[open + 2..];
        let close = body.find("]]");
        let reopen = body.find("[[");
        match (close, reopen) {
            (Some(c), Some(r)) if r < c => {
                // Nested markup such as a file caption; restart at the inner link.
                rest = &body[r..];
            }
            (Some(c), _) => {
                rest = &body[c + 2..];
                return Some(&body[..c]);
            }
            (None, _) => {
                rest = "";
                return None;
            }
        }
    })
}

#[derive(Debug, Deserialize)]
struct InputRecord {
    #[allow(dead_code)]
    id: Option<serde_json::Value>,
    title: Option<String>,
    text: Option<String>,
    links: Option<Vec<String>>,
}

fn truncate_bytes(text: &mut String, cap: usize) -> bool {
    if text.len() <= cap {
        return false;
    }
    let mut cut = cap;
    while !text.is_char_boundary(cut) {
        cut -= 1;
    }
    text.truncate(cut);
    true
}

/// Streams input records from `source` into `sink`, assigning dense ids in
/// emission order.
pub fn ingest_corpus<R, F>(source: R, config: &IngestConfig, mut sink: F) -> Result<IngestReport>
where
    R: BufRead,
    F: FnMut(Document) -> Result<()>,
{
    let extractor = LinkExtractor::new(&config.namespace_blacklist);
    let mut report = IngestReport::default();
    let mut source = source;
    let mut line = String::new();
    loop {
        line.clear();
        let n = source
            .read_line(&mut line)
            .map_err(|e| Error::io("cannot read corpus source", e))?;
        if n == 0 {
            break;
        }
        report.bytes_read += n as u64;
        if line.trim().is_empty() {
            continue;
        }
        report.documents_read += 1;

        let record: InputRecord = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(err) => {
                log::debug!("skipping malformed record {}: {err}", report.documents_read);
                continue;
            }
        };
        let (Some(raw_title), Some(mut text)) = (record.title, record.text) else {
            continue;
        };
        let Ok(title) = normalize_title(&raw_title) else {
            continue;
        };
        if truncate_bytes(&mut text, config.max_doc_bytes) {
            report.documents_truncated += 1;
        }

        let extracted = match record.links {
            Some(raw_links) => {
                let mut out = ExtractedLinks::default();
                let mut seen = HashSet::new();
                for raw in raw_links {
                    match normalize_title(&raw) {
                        Ok(t) if !extractor.is_excluded(&t) => {
                            if seen.insert(t.clone()) {
                                out.targets.push(t);
                            }
                        }
                        _ => out.dropped += 1,
                    }
                }
                out
            }
            None => extractor.extract(&text),
        };
        let mut links = extracted.targets;
        report.links_dropped += extracted.dropped;
        let before = links.len();
        links.retain(|l| *l != title);
        report.links_dropped += (before - links.len()) as u64;
        report.links_extracted += links.len() as u64;

        let doc = Document {
            doc_id: report.documents_emitted as DocId,
            title,
            text,
            links,
        };
        report.documents_emitted += 1;
        sink(doc)?;
    }
    Ok(report)
}

/// Ingests `input` (a path or `-`) and writes documents as JSONL to `output`.
pub fn ingest_file(input: &Path, output: &Path, config: &IngestConfig) -> Result<IngestReport> {
    let reader = jsonl::open_reader(input)?;
    let mut writer = jsonl::create_writer(output)?;
    let report = ingest_corpus(reader, config, |doc| {
        jsonl::write_line(&mut writer, &doc).map(|_| ())
    })?;
    writer
        .flush()
        .map_err(|e| Error::io_path("cannot flush", output, e))?;
    Ok(report)
}

/// In-memory document table indexed by `doc_id`.
#[derive(Debug, Clone, Default)]
pub struct DocStore {
    docs: Vec<Document>,
}

impl DocStore {
    pub fn new(docs: Vec<Document>) -> Result<Self> {
        for (idx, doc) in docs.iter().enumerate() {
            if doc.doc_id as usize != idx {
                return Err(Error::precondition(format!(
                    "document ids must be dense: position {idx} holds id {}",
                    doc.doc_id
                )));
            }
        }
        Ok(Self { docs })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::new(jsonl::read_all(path)?)
    }

    pub fn get(&self, id: DocId) -> Option<&Document> {
        self.docs.get(id as usize)
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn documents(&self) -> &[Document] {
        &self.docs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ingest_str(input: &str) -> (Vec<Document>, IngestReport) {
        let mut docs = Vec::new();
        let report = ingest_corpus(input.as_bytes(), &IngestConfig::default(), |d| {
            docs.push(d);
            Ok(())
        })
        .unwrap();
        (docs, report)
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_title("hans_zimmer").unwrap(), "Hans zimmer");
        assert_eq!(
            normalize_title("  Oppenheimer  (film) ").unwrap(),
            "Oppenheimer (film)"
        );
        assert_eq!(
            normalize_title("Ludwig Göransson").unwrap(),
            "Ludwig Göransson"
        );
        assert_eq!(normalize_title("__a__b").unwrap(), "A b");
        assert!(matches!(normalize_title(" _\t "), Err(Error::EmptyTitle)));
        assert!(normalize_title("").is_err());
    }

    #[test]
    fn extract_examples() {
        assert_eq!(
            extract_links("[[Oppenheimer (film)|Oppenheimer]]"),
            vec!["Oppenheimer (film)"]
        );
        assert_eq!(extract_links("[[Dune#Score]] and [[Dune]]"), vec!["Dune"]);
        assert_eq!(
            extract_links("[[File:Poster.jpg]] see [[Tenet]]"),
            vec!["Tenet"]
        );
    }

    #[test]
    fn extract_edge_cases() {
        let ex = LinkExtractor::default();
        let out = ex.extract("[[de:Dune]] [[Category:Films]] [[#Plot]] [[Tenet]] [[Nolan");
        assert_eq!(out.targets, vec!["Tenet"]);
        assert_eq!(out.dropped, 3);

        // nested caption link survives, the file itself does not
        let out =
            ex.extract("[[File:x.jpg|thumb|Poster of [[Tenet (film)|Tenet]]]] [[dune_(novel)]]");
        assert_eq!(out.targets, vec!["Tenet (film)", "Dune (novel)"]);

        // case differences collapse after normalization
        assert_eq!(extract_links("[[dune]] [[Dune]]"), vec!["Dune"]);
        assert_eq!(extract_links("[[:Category:Films]]"), Vec::<String>::new());
        assert_eq!(extract_links("no links here ]] [["), Vec::<String>::new());
    }

    #[test]
    fn custom_blacklist() {
        let ex = LinkExtractor::new(["Draft:"]);
        let out = ex.extract("[[Draft:Thing]] [[File:x.png]]");
        assert_eq!(out.targets, vec!["File:x.png"]);
        assert_eq!(out.dropped, 1);
    }

    #[test]
    fn ingest_empty_stream() {
        let (docs, report) = ingest_str("");
        assert!(docs.is_empty());
        assert_eq!(report, IngestReport::default());
    }

    #[test]
    fn ingest_skips_malformed() {
        let input = concat!(
            r#"{"title":"A","text":"[[B]]"}"#,
            "\n",
            r#"{"title":"B","text":"x"}"#,
            "\n",
            r#"{"text":"no title"}"#,
            "\n",
            r#"{"title":"C","text":"[[C]] [[A]]","links":null}"#,
            "\n",
        );
        let (docs, report) = ingest_str(input);
        assert_eq!(report.documents_read, 4);
        assert_eq!(report.documents_emitted, 3);
        assert_eq!(docs[2].doc_id, 2);
        assert_eq!(docs[2].links, vec!["A"]);
        assert_eq!(report.links_extracted, 2);
        // self link on C
        assert_eq!(report.links_dropped, 1);
        assert_eq!(report.bytes_read, input.len() as u64);
    }

    #[test]
    fn explicit_links_take_precedence() {
        let input = r#"{"id":"7","title":"a_b","text":"[[Ignored]]","links":["x_y","X y","A b","File:z.png"]}"#;
        let (docs, report) = ingest_str(input);
        assert_eq!(docs[0].title, "A b");
        assert_eq!(docs[0].links, vec!["X y"]);
        assert_eq!(report.links_dropped, 2);
    }

    #[test]
    fn truncates_oversized_documents() {
        let config = IngestConfig {
            max_doc_bytes: 5,
            ..IngestConfig::default()
        };
        let input = r#"{"title":"A","text":"ééé [[B]]"}"#;
        let mut docs = Vec::new();
        let report = ingest_corpus(input.as_bytes(), &config, |d| {
            docs.push(d);
            Ok(())
        })
        .unwrap();
        assert_eq!(docs[0].text, "éé");
        assert!(docs[0].links.is_empty());
        assert_eq!(report.documents_truncated, 1);
    }

    #[test]
    fn docstore_requires_dense_ids() {
        let doc = Document {
            doc_id: 3,
            title: "A".into(),
            text: String::new(),
            links: vec![],
        };
        assert!(DocStore::new(vec![doc]).is_err());
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(raw in "\\PC{0,40}") {
            if let Ok(once) = normalize_title(&raw) {
                prop_assert_eq!(normalize_title(&once).unwrap(), once);
            }
        }

        #[test]
        fn normalize_is_idempotent_any_unicode(raw in any::<String>()) {
            if let Ok(once) = normalize_title(&raw) {
                prop_assert_eq!(normalize_title(&once).unwrap(), once);
            }
        }

        #[test]
        fn extraction_is_duplicate_free_and_stable(
            parts in proptest::collection::vec("[a-zA-Z_ #|:]{0,12}", 0..20)
        ) {
            let text: String = parts.iter().map(|p| format!("[[{p}]] ")).collect();
            let first = extract_links(&text);
            let set: HashSet<_> = first.iter().collect();
            prop_assert_eq!(set.len(), first.len());
            prop_assert_eq!(extract_links(&text), first);
        }
    }
}
