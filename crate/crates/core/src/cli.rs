//! Command-line front end. `main.rs` only forwards to [`run`].

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::corpus::ingest_file;
use crate::error::{require_exists, Error, Result};
use crate::graph::LinkGraph;
use crate::motif::{discover, write_pairs};
use crate::passk::{aggregate, curve_table, render_csv, PassKRecord};
use crate::pipeline::{build_graph_file, run_pipeline, validate_file};
use crate::stats::{compute_stats_file, render_report, ReportFormat, DEFAULT_BUCKETS};
use crate::synthesis::{run_synthesis, RunPaths, SynthesisMode};
use crate::validate::{OnViolation, ValidationPolicy};
use crate::{corpus::DocStore, jsonl, motif::read_pairs};

#[derive(Debug, Parser)]
#[command(
    name = "linksynth",
    version,
    about = "Mine hyperlink motifs from an encyclopedia dump and synthesize cross-document QA",
    arg_required_else_help = true
)]
pub struct Cli {
    /// Pipeline config file (TOML). Flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Log filter, e.g. `info` or `linksynth=debug`.
    #[arg(long, global = true, value_name = "LEVEL")]
    pub log_level: Option<String>,

    /// Seeds retry jitter and other randomized paths.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalize a raw corpus and extract its links.
    Ingest(IngestArgs),
    /// Build or inspect the compressed link graph.
    #[command(subcommand, arg_required_else_help = true)]
    Graph(GraphCommand),
    /// Enumerate dual-link and co-mention pairs.
    Discover(DiscoverArgs),
    /// Request QA completions for every pair.
    Synthesize(SynthesizeArgs),
    /// Parse completions and apply the quality filters.
    Validate(ValidateArgs),
    /// Length statistics, buckets and composition of a dataset.
    Stats(StatsArgs),
    /// Unbiased pass@k from per-question sample counts.
    Passk(PassKArgs),
    /// Run every stage from the config file end to end.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Raw corpus JSONL, or `-` for stdin.
    #[arg(long, value_name = "PATH|-")]
    pub input: Option<PathBuf>,
    /// Document JSONL to write, or `-` for stdout.
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
    /// Comma-separated namespace prefixes to drop, e.g. `File:,Category:`.
    #[arg(long, value_name = "CSV", value_delimiter = ',')]
    pub namespace_blacklist: Option<Vec<String>>,
    /// Truncate document text beyond this many bytes.
    #[arg(long, value_name = "N")]
    pub max_doc_bytes: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum GraphCommand {
    /// Build the graph from ingested documents.
    Build {
        #[arg(long, value_name = "PATH")]
        docs: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        output: Option<PathBuf>,
    },
    /// Print graph statistics as JSON.
    Stats {
        #[arg(long, value_name = "PATH")]
        graph: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct DiscoverArgs {
    #[arg(long, value_name = "PATH")]
    pub graph: Option<PathBuf>,
    /// Pair JSONL to write.
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
    /// Skip hubs with in-degree above N.
    #[arg(long, value_name = "N")]
    pub hub_cap: Option<u32>,
    /// Keep at most N pairs.
    #[arg(long, value_name = "N")]
    pub max_pairs: Option<u64>,
    /// One co-mention pair per qualifying hub instead of one per pair.
    #[arg(long)]
    pub emit_all_hubs: bool,
}

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    #[arg(long, value_name = "PATH")]
    pub pairs: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub docs: Option<PathBuf>,
    /// Raw-completion JSONL (appended to on resume).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub checkpoint: Option<PathBuf>,
    /// cross_doc, single_doc or three_doc.
    #[arg(long, value_name = "MODE")]
    pub mode: Option<SynthesisMode>,
    /// Requests in flight at once.
    #[arg(long, value_name = "N")]
    pub concurrency: Option<usize>,
    #[arg(long, value_name = "F")]
    pub temperature: Option<f64>,
    #[arg(long, value_name = "F")]
    pub top_p: Option<f64>,
    #[arg(long, value_name = "N")]
    pub max_tokens: Option<u64>,
    /// Process at most N pairs beyond the checkpoint.
    #[arg(long, value_name = "N")]
    pub limit: Option<u64>,
    /// Persist the checkpoint every N completed pairs.
    #[arg(long, value_name = "N")]
    pub checkpoint_every: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Raw-completion JSONL.
    #[arg(long = "in", value_name = "PATH")]
    pub input: Option<PathBuf>,
    /// Dataset JSONL to write, or `-` for stdout.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Validation policy TOML (replaces the config file's [validation]).
    #[arg(long, value_name = "TOML")]
    pub policy: Option<PathBuf>,
    /// reject or flag.
    #[arg(long, value_name = "MODE")]
    pub mode: Option<OnViolation>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Dataset JSONL.
    #[arg(long = "in", value_name = "PATH")]
    pub input: Option<PathBuf>,
    /// json or table.
    #[arg(long, value_name = "FMT", default_value = "json")]
    pub format: ReportFormat,
    /// Ascending bucket boundaries starting at 0.
    #[arg(
        long,
        value_name = "CSV",
        value_delimiter = ',',
        default_value = "0,200,500,1000,2000,5000,10000"
    )]
    pub buckets: Vec<u64>,
}

#[derive(Debug, Args)]
pub struct PassKArgs {
    /// JSONL of {"question_id", "n", "c"}.
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    /// Single k.
    #[arg(long, value_name = "K", conflicts_with = "curve")]
    pub k: Option<u64>,
    /// Log-spaced curve from 1 to --k-max.
    #[arg(long, requires = "k_max")]
    pub curve: bool,
    #[arg(long, value_name = "K")]
    pub k_max: Option<u64>,
    /// Number of log-spaced curve points.
    #[arg(long, value_name = "N", default_value_t = 8)]
    pub points: usize,
    /// json or csv; plain number for a single k when omitted.
    #[arg(long, value_name = "FMT")]
    pub format: Option<PassKFormat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PassKFormat {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Stop synthesis after N new pairs (resume by rerunning).
    #[arg(long, value_name = "N")]
    pub limit: Option<u64>,
}

enum Failure {
    Usage(String),
    Op(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Op(e)
    }
}

type CliResult = std::result::Result<(), Failure>;

fn need(
    flag: Option<PathBuf>,
    config: Option<&PathBuf>,
    name: &str,
) -> std::result::Result<PathBuf, Failure> {
    flag.or_else(|| config.cloned())
        .ok_or_else(|| Failure::Usage(format!("--{name} is required (or set it under [paths])")))
}

fn report<T: Serialize>(value: &T) {
    let body = serde_json::to_string_pretty(value).expect("report serializes");
    eprintln!("{body}");
}

fn print_stdout(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Error::io("cannot write to stdout", e))
}

fn runtime() -> Result<tokio::runtime::Runtime> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Error::io("cannot start async runtime", e))
}

/// Parses `args` (program name first) and runs the command. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let config = match &cli.config {
        Some(path) => match PipelineConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                init_logging(cli.log_level.as_deref().unwrap_or("info"));
                log::error!("{e}");
                return 1;
            }
        },
        None => PipelineConfig::default(),
    };
    init_logging(cli.log_level.as_deref().unwrap_or(&config.logging.level));
    let mut config = config;
    if cli.seed.is_some() {
        config.seed = cli.seed;
    }
    match dispatch(cli.command, config) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            2
        }
        Err(Failure::Op(e)) => {
            log::error!("{e}");
            1
        }
    }
}

fn init_logging(filter: &str) {
    let _ = env_logger::Builder::new()
        .parse_filters(filter)
        .target(env_logger::Target::Stderr)
        .try_init();
}

fn dispatch(command: Command, mut config: PipelineConfig) -> CliResult {
    match command {
        Command::Ingest(a) => {
            let input = need(a.input, config.paths.corpus.as_ref(), "input")?;
            let output = need(a.output, config.paths.docs.as_ref(), "output")?;
            if let Some(list) = a.namespace_blacklist {
                config.ingest.namespace_blacklist = list;
            }
            if let Some(n) = a.max_doc_bytes {
                config.ingest.max_doc_bytes = n;
            }
            let r = ingest_file(&require_exists(&input)?, &output, &config.ingest)?;
            report(&r);
        }
        Command::Graph(GraphCommand::Build { docs, output }) => {
            let docs = need(docs, config.paths.docs.as_ref(), "docs")?;
            let output = need(output, config.paths.graph.as_ref(), "output")?;
            report(&build_graph_file(&docs, &output)?);
        }
        Command::Graph(GraphCommand::Stats { graph }) => {
            let graph = need(graph, config.paths.graph.as_ref(), "graph")?;
            let g = LinkGraph::load(&require_exists(&graph)?)?;
            let body = serde_json::to_string_pretty(g.stats()).expect("stats serialize");
            print_stdout(&format!("{body}\n"))?;
        }
        Command::Discover(a) => {
            let graph = need(a.graph, config.paths.graph.as_ref(), "graph")?;
            let output = need(a.output, config.paths.pairs.as_ref(), "output")?;
            let d = &mut config.discovery;
            if let Some(cap) = a.hub_cap {
                d.hub_in_degree_cap = cap;
            }
            if a.max_pairs.is_some() {
                d.max_pairs = a.max_pairs;
            }
            d.emit_all_hubs |= a.emit_all_hubs;
            d.validate()?;
            let g = LinkGraph::load(&require_exists(&graph)?)?;
            let (pairs, r) = discover(&g, &config.discovery)?;
            write_pairs(&output, &pairs, &g)?;
            report(&r);
        }
        Command::Synthesize(a) => synthesize(a, config)?,
        Command::Validate(a) => {
            let input = need(a.input, config.paths.raw.as_ref(), "in")?;
            let output = need(a.out, config.paths.dataset.as_ref(), "out")?;
            let mut policy = match &a.policy {
                Some(path) => ValidationPolicy::load(&require_exists(path)?)?,
                None => config.validation_policy(),
            };
            if let Some(mode) = a.mode {
                policy.on_violation = mode;
            }
            report(&validate_file(&input, &output, &policy)?);
        }
        Command::Stats(a) => {
            let input = need(a.input, config.paths.dataset.as_ref(), "in")?;
            let buckets = if a.buckets.is_empty() {
                DEFAULT_BUCKETS.to_vec()
            } else {
                a.buckets
            };
            let r = compute_stats_file(&require_exists(&input)?, &buckets)?;
            let mut text = render_report(&r, a.format);
            if !text.ends_with('\n') {
                text.push('\n');
            }
            print_stdout(&text)?;
        }
        Command::Passk(a) => passk(a)?,
        Command::Pipeline(a) => {
            if let Some(limit) = a.limit {
                config.synthesis.scheduler.limit = Some(limit);
            }
            config.endpoint = config.endpoint.clone().with_env();
            let client = config.endpoint.build_client()?;
            let r = runtime()?.block_on(run_pipeline(&config, client))?;
            report(&r);
        }
    }
    Ok(())
}

fn synthesize(a: SynthesizeArgs, mut config: PipelineConfig) -> CliResult {
    let pairs_path = need(a.pairs, config.paths.pairs.as_ref(), "pairs")?;
    let docs_path = need(a.docs, config.paths.docs.as_ref(), "docs")?;
    let out = need(a.out, config.paths.raw.as_ref(), "out")?;
    let checkpoint = match a.checkpoint.or_else(|| config.paths.checkpoint.clone()) {
        Some(p) => p,
        None => default_checkpoint(&out),
    };
    let p = &mut config.synthesis.params;
    if let Some(m) = a.mode {
        p.mode = m;
    }
    if let Some(t) = a.temperature {
        p.temperature = t;
    }
    if let Some(t) = a.top_p {
        p.top_p = t;
    }
    if let Some(n) = a.max_tokens {
        p.max_output_tokens = n;
    }
    let s = &mut config.synthesis.scheduler;
    if let Some(c) = a.concurrency {
        s.concurrency = c;
    }
    if a.limit.is_some() {
        s.limit = a.limit;
    }
    if let Some(n) = a.checkpoint_every {
        s.checkpoint_every = n;
    }
    config.synthesis.params.validate()?;

    let pairs = read_pairs(&require_exists(&pairs_path)?)?;
    let docs = DocStore::load(&require_exists(&docs_path)?)?;
    let endpoint = config.endpoint.clone().with_env();
    let client = endpoint.build_client()?;
    let r = runtime()?.block_on(run_synthesis(
        &pairs,
        &docs,
        client,
        &config.synthesis.params,
        &config.run_options(),
        &RunPaths {
            output: out,
            checkpoint,
        },
    ))?;
    report(&r);
    Ok(())
}

fn default_checkpoint(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(OsString::from).unwrap_or_default();
    name.push(".checkpoint.json");
    out.with_file_name(name)
}

fn passk(a: PassKArgs) -> CliResult {
    let records: Vec<PassKRecord> = jsonl::read_all(&require_exists(&a.input)?)?;
    let curve = match (a.k, a.curve, a.k_max) {
        (Some(k), false, _) => aggregate(&records, &[k])?,
        (None, true, Some(k_max)) => curve_table(&records, k_max, a.points)?,
        _ => {
            return Err(Failure::Usage(
                "pass either --k K or --curve --k-max K".into(),
            ))
        }
    };
    let text = match a.format {
        Some(PassKFormat::Json) => {
            serde_json::to_string_pretty(&curve).expect("curve serializes") + "\n"
        }
        Some(PassKFormat::Csv) => render_csv(&curve),
        None if a.k.is_some() => format!("{}\n", curve.values[0]),
        None => render_csv(&curve),
    };
    print_stdout(&text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn checkpoint_defaults_next_to_output() {
        assert_eq!(
            default_checkpoint(Path::new("out/raw.jsonl")),
            PathBuf::from("out/raw.jsonl.checkpoint.json")
        );
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(["linksynth"]), 2);
        assert_eq!(run(["linksynth", "frobnicate"]), 2);
        assert_eq!(run(["linksynth", "passk", "--bogus"]), 2);
        assert_eq!(run(["linksynth", "--help"]), 0);
    }
}
