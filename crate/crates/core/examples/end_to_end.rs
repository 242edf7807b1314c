//! Whole pipeline from a config file, the same path `linksynth pipeline` takes.
//!
//! ```bash
//! cargo run -p linksynth --example end_to_end
//! ```

use std::path::Path;

use linksynth::pipeline::run_pipeline;
use linksynth::PipelineConfig;

#[tokio::main]
async fn main() -> linksynth::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let dir = tempfile::tempdir().expect("tempdir");

    let mut config = PipelineConfig::load(&fixtures.join("e2e.toml"))?;
    config.paths.work_dir = Some(dir.path().to_path_buf());
    let client = config.endpoint.clone().with_env().build_client()?;

    let report = run_pipeline(&config, client).await?;
    println!(
        "{} docs, {} edges, {} + {} pairs, {} accepted",
        report.ingest.documents_emitted,
        report.graph.edges,
        report.discovery.dual_link_pairs,
        report.discovery.co_mention_pairs,
        report.validation.accepted
    );

    let dataset = std::fs::read_to_string(dir.path().join("dataset.jsonl")).expect("dataset");
    if let Some(first) = dataset.lines().next() {
        println!("{first}");
    }
    Ok(())
}
