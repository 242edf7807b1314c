//! Ingest the bundled 12-document corpus, build the link graph and round-trip
//! it through the binary format.
//!
//! ```bash
//! cargo run -p linksynth --example ingest_and_graph
//! ```

use std::path::Path;

use linksynth::corpus::{extract_links, ingest_file, IngestConfig};
use linksynth::{build_graph, DocStore, LinkGraph};

fn main() -> linksynth::Result<()> {
    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/mini_corpus.jsonl");
    let dir = tempfile::tempdir().expect("tempdir");
    let docs_path = dir.path().join("docs.jsonl");

    let report = ingest_file(&corpus, &docs_path, &IngestConfig::default())?;
    println!("ingest: {report:?}");

    // link extraction on its own
    println!(
        "{:?}",
        extract_links("See [[Eta_Tower|the tower]], [[File:x.png]] and [[fr:Tour]].")
    );

    let docs = DocStore::load(&docs_path)?;
    let graph = build_graph(docs.documents())?;
    for v in 0..graph.vertex_count() as u32 {
        let names: Vec<&str> = graph
            .out_neighbors(v)?
            .iter()
            .filter_map(|&t| graph.title(t))
            .collect();
        println!(
            "{:>14} -> {}",
            graph.title(v).unwrap_or("?"),
            names.join(", ")
        );
    }

    let path = dir.path().join("graph.bin");
    graph.save(&path)?;
    let back = LinkGraph::load(&path)?;
    assert_eq!(back, graph);
    println!("{}", serde_json::to_string_pretty(back.stats()).unwrap());
    Ok(())
}
