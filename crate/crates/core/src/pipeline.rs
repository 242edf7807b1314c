//! Stage-to-stage plumbing shared by the CLI and the end-to-end example.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::config::{PipelineConfig, ResolvedPaths};
use crate::corpus::{ingest_file, DocStore, IngestReport};
use crate::error::{require_exists, Error, Result};
use crate::graph::{build_graph, GraphStats, LinkGraph};
use crate::jsonl;
use crate::motif::{discover, read_pairs, write_pairs, DiscoveryReport};
use crate::stats::{compute_stats_file, StatsReport, DEFAULT_BUCKETS};
use crate::synthesis::{read_records, run_synthesis, ChatClient, RunPaths, SynthesisReport};
use crate::validate::{validate_completions, DatasetRecord, ValidationPolicy, ValidationReport};

/// Loads ingested documents and writes the compressed graph.
pub fn build_graph_file(docs: &Path, output: &Path) -> Result<GraphStats> {
    let store = DocStore::load(&require_exists(docs)?)?;
    let graph = build_graph(store.documents())?;
    graph.save(output)?;
    Ok(*graph.stats())
}

pub fn validate_file(
    raw: &Path,
    output: &Path,
    policy: &ValidationPolicy,
) -> Result<ValidationReport> {
    policy.validate()?;
    let records = read_records(&require_exists(raw)?)?;
    let (accepted, report) = validate_completions(&records, policy);
    let mut writer = jsonl::create_writer(output)?;
    for qa in &accepted {
        jsonl::write_line(&mut writer, &DatasetRecord::from(qa))?;
    }
    writer
        .flush()
        .map_err(|e| Error::io_path("cannot flush", output, e))?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineReport {
    pub ingest: IngestReport,
    pub graph: GraphStats,
    pub discovery: DiscoveryReport,
    pub synthesis: SynthesisReport,
    pub validation: ValidationReport,
    pub stats: StatsReport,
}

/// ingest → graph → discover → synthesize → validate → stats.
///
/// Synthesis resumes from its checkpoint when one exists, so rerunning after
/// an interruption only issues requests for the pairs still missing.
pub async fn run_pipeline(
    config: &PipelineConfig,
    client: Arc<dyn ChatClient>,
) -> Result<PipelineReport> {
    config.validate()?;
    let paths = config.resolved_paths()?;
    require_exists(&paths.corpus)?;
    run_stages(config, &paths, client).await
}

async fn run_stages(
    config: &PipelineConfig,
    paths: &ResolvedPaths,
    client: Arc<dyn ChatClient>,
) -> Result<PipelineReport> {
    let ingest = ingest_file(&paths.corpus, &paths.docs, &config.ingest)?;
    log::info!(
        "ingest: {} documents, {} links",
        ingest.documents_emitted,
        ingest.links_extracted
    );

    let docs = DocStore::load(&paths.docs)?;
    let graph: LinkGraph = build_graph(docs.documents())?;
    graph.save(&paths.graph)?;
    log::info!(
        "graph: {} vertices, {} edges",
        graph.vertex_count(),
        graph.edge_count()
    );

    let (pairs, discovery) = discover(&graph, &config.discovery)?;
    write_pairs(&paths.pairs, &pairs, &graph)?;
    log::info!(
        "discover: {} dual-link, {} co-mention",
        discovery.dual_link_pairs,
        discovery.co_mention_pairs
    );
    let pairs = read_pairs(&paths.pairs)?;

    let synthesis = run_synthesis(
        &pairs,
        &docs,
        client,
        &config.synthesis.params,
        &config.run_options(),
        &RunPaths {
            output: paths.raw.clone(),
            checkpoint: paths.checkpoint.clone(),
        },
    )
    .await?;
    log::info!(
        "synthesize: {} ok, {} failed, {} resumed",
        synthesis.succeeded,
        synthesis.failed,
        synthesis.skipped_by_checkpoint
    );

    let validation = validate_file(&paths.raw, &paths.dataset, &config.validation_policy())?;
    log::info!(
        "validate: {} accepted of {}",
        validation.accepted,
        validation.instances
    );

    let stats = compute_stats_file(&paths.dataset, DEFAULT_BUCKETS)?;
    let body = serde_json::to_vec_pretty(&stats).expect("stats report serializes");
    std::fs::write(&paths.stats, body)
        .map_err(|e| Error::io_path("cannot write", &paths.stats, e))?;

    Ok(PipelineReport {
        ingest,
        graph: *graph.stats(),
        discovery,
        synthesis,
        validation,
        stats,
    })
}
