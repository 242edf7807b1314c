//! Run the checkpointed synthesis scheduler against the deterministic mock
//! endpoint, stop halfway, then resume.
//!
//! Point `SYNTH_ENDPOINT` at a real chat-completions server (http only) to use it
//! instead of the mock.
//!
//! ```bash
//! cargo run -p linksynth --example synthesize_with_mock
//! ```

use std::path::Path;
use std::sync::Arc;

use linksynth::config::EndpointConfig;
use linksynth::corpus::{ingest_file, IngestConfig};
use linksynth::motif::PairRecord;
use linksynth::synthesis::{read_records, run_synthesis, RunOptions, RunPaths, SynthesisRecord};
use linksynth::{build_graph, discover, DiscoveryConfig, DocStore, SynthesisParams};

#[tokio::main]
async fn main() -> linksynth::Result<()> {
    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/mini_corpus.jsonl");
    let dir = tempfile::tempdir().expect("tempdir");
    let docs_path = dir.path().join("docs.jsonl");
    ingest_file(&corpus, &docs_path, &IngestConfig::default())?;
    let docs = DocStore::load(&docs_path)?;
    let graph = build_graph(docs.documents())?;
    let (pairs, _) = discover(&graph, &DiscoveryConfig::default())?;
    let pairs: Vec<PairRecord> = pairs
        .iter()
        .map(|p| PairRecord::from_pair(p, &graph))
        .collect();

    let endpoint = EndpointConfig {
        url: Some("mock".into()),
        ..EndpointConfig::default()
    };
    let endpoint = match std::env::var("SYNTH_ENDPOINT") {
        Ok(url) => EndpointConfig {
            url: Some(url),
            ..endpoint
        }
        .with_env(),
        Err(_) => endpoint,
    };
    let client = endpoint.build_client()?;

    let paths = RunPaths {
        output: dir.path().join("raw.jsonl"),
        checkpoint: dir.path().join("raw.checkpoint.json"),
    };
    let params = SynthesisParams::default();
    let half = RunOptions {
        limit: Some(pairs.len() as u64 / 2),
        checkpoint_every: 1,
        ..RunOptions::default()
    };
    let first = run_synthesis(&pairs, &docs, Arc::clone(&client), &params, &half, &paths).await?;
    println!("first run:  {first:?}");
    let second = run_synthesis(
        &pairs,
        &docs,
        client,
        &params,
        &RunOptions::default(),
        &paths,
    )
    .await?;
    println!("resumed:    {second:?}");

    for record in read_records(&paths.output)? {
        match record {
            SynthesisRecord::Ok(c) => println!(
                "{} ({}): {} chars, attempt {}",
                c.pair.key(),
                c.pair.relation,
                c.completion_text.len(),
                c.attempt
            ),
            SynthesisRecord::Failed(f) => println!("{} failed: {}", f.pair.key(), f.error),
        }
    }
    Ok(())
}
