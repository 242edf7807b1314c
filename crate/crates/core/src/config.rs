//! Pipeline configuration file (TOML, one section per stage).
//!
//! ```toml
//! [paths]
//! corpus = "corpus.jsonl"
//! work_dir = "out"
//!
//! [discovery]
//! hub_in_degree_cap = 10000
//!
//! [synthesis]
//! mode = "cross_doc"
//! concurrency = 16
//!
//! [endpoint]
//! url = "http://localhost:8000/v1"
//! ```
//!
//! Relative paths are resolved against the directory holding the file.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::corpus::IngestConfig;
use crate::error::{Error, Result};
use crate::motif::DiscoveryConfig;
use crate::synthesis::{
    ChatClient, HttpChatClient, MockChatClient, RetryPolicy, RunOptions, SynthesisParams,
};
use crate::validate::ValidationPolicy;

pub const ENV_ENDPOINT: &str = "SYNTH_ENDPOINT";
pub const ENV_TOKEN: &str = "SYNTH_TOKEN";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub corpus: Option<PathBuf>,
    /// Directory for every intermediate and final artifact of `pipeline`.
    pub work_dir: Option<PathBuf>,
    pub docs: Option<PathBuf>,
    pub graph: Option<PathBuf>,
    pub pairs: Option<PathBuf>,
    pub raw: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub stats: Option<PathBuf>,
}

/// Scheduler settings that sit next to the generation parameters in `[synthesis]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SchedulerConfig {
    pub concurrency: usize,
    pub checkpoint_every: u64,
    pub limit: Option<u64>,
    pub max_attempts: u32,
    pub base_delay_ms: u64,
    pub backoff_factor: f64,
    pub jitter: f64,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        let retry = RetryPolicy::default();
        let run = RunOptions::default();
        Self {
            concurrency: run.concurrency,
            checkpoint_every: run.checkpoint_every,
            limit: run.limit,
            max_attempts: retry.max_attempts,
            base_delay_ms: retry.base_delay.as_millis() as u64,
            backoff_factor: retry.factor,
            jitter: retry.jitter,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthesisSection {
    #[serde(flatten)]
    pub params: SynthesisParams,
    #[serde(flatten)]
    pub scheduler: SchedulerConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EndpointConfig {
    /// Chat-completions URL; `mock` selects the built-in deterministic generator.
    pub url: Option<String>,
    pub token: Option<String>,
    pub timeout_secs: u64,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        Self {
            url: None,
            token: None,
            timeout_secs: 600,
        }
    }
}

impl EndpointConfig {
    /// Fills unset fields from `SYNTH_ENDPOINT` / `SYNTH_TOKEN`.
    pub fn with_env(mut self) -> Self {
        if self.url.is_none() {
            self.url = std::env::var(ENV_ENDPOINT).ok().filter(|s| !s.is_empty());
        }
        if self.token.is_none() {
            self.token = std::env::var(ENV_TOKEN).ok().filter(|s| !s.is_empty());
        }
        self
    }

    pub fn build_client(&self) -> Result<Arc<dyn ChatClient>> {
        let url = self.url.as_deref().ok_or_else(|| {
            Error::Config(format!(
                "no endpoint configured; set [endpoint] url or {ENV_ENDPOINT}"
            ))
        })?;
        if url == "mock" || url.starts_with("mock:") {
            return Ok(Arc::new(MockChatClient));
        }
        if !url.starts_with("http://") {
            return Err(Error::Config(format!(
                "endpoint {url:?} must be an http:// URL or \"mock\""
            )));
        }
        let client = HttpChatClient::new(
            url,
            self.token.clone(),
            Duration::from_secs(self.timeout_secs.max(1)),
        )
        .map_err(|e| Error::Config(e.to_string()))?;
        Ok(Arc::new(client))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoggingConfig {
    pub level: String,
}

impl Default for LoggingConfig {
    fn default() -> Self {
        Self {
            level: "info".into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: PathsConfig,
    pub ingest: IngestConfig,
    pub discovery: DiscoveryConfig,
    pub synthesis: SynthesisSection,
    pub validation: ValidationPolicy,
    pub endpoint: EndpointConfig,
    pub logging: LoggingConfig,
    /// Seeds the retry jitter.
    pub seed: Option<u64>,
}

fn rebase(base: &Path, path: &mut Option<PathBuf>) {
    if let Some(p) = path {
        if p.is_relative() && p != Path::new("-") {
            *p = base.join(&*p);
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io_path("cannot read", path, e))?;
        let mut config = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let p = &mut config.paths;
        for slot in [
            &mut p.corpus,
            &mut p.work_dir,
            &mut p.docs,
            &mut p.graph,
            &mut p.pairs,
            &mut p.raw,
            &mut p.checkpoint,
            &mut p.dataset,
            &mut p.stats,
        ] {
            rebase(base, slot);
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.discovery.validate()?;
        self.synthesis.params.validate()?;
        self.validation.validate()?;
        if self.synthesis.scheduler.concurrency == 0 {
            return Err(Error::Config("concurrency must be at least 1".into()));
        }
        Ok(())
    }

    pub fn run_options(&self) -> RunOptions {
        let s = &self.synthesis.scheduler;
        RunOptions {
            concurrency: s.concurrency,
            checkpoint_every: s.checkpoint_every,
            limit: s.limit,
            retry: RetryPolicy {
                max_attempts: s.max_attempts,
                base_delay: Duration::from_millis(s.base_delay_ms),
                factor: s.backoff_factor,
                jitter: s.jitter,
                seed: self.seed,
            },
        }
    }

    /// The validation policy with the per-pair quota taken from the synthesis section.
    pub fn validation_policy(&self) -> ValidationPolicy {
        ValidationPolicy {
            qa_per_pair: self.synthesis.params.qa_per_pair,
            ..self.validation.clone()
        }
    }

    pub fn resolved_paths(&self) -> Result<ResolvedPaths> {
        let corpus = self
            .paths
            .corpus
            .clone()
            .ok_or_else(|| Error::Config("[paths] corpus is required".into()))?;
        let work = self
            .paths
            .work_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("linksynth-out"));
        let pick = |p: &Option<PathBuf>, name: &str| p.clone().unwrap_or_else(|| work.join(name));
        Ok(ResolvedPaths {
            corpus,
            docs: pick(&self.paths.docs, "docs.jsonl"),
            graph: pick(&self.paths.graph, "graph.bin"),
            pairs: pick(&self.paths.pairs, "pairs.jsonl"),
            raw: pick(&self.paths.raw, "raw.jsonl"),
            checkpoint: pick(&self.paths.checkpoint, "raw.checkpoint.json"),
            dataset: pick(&self.paths.dataset, "dataset.jsonl"),
            stats: pick(&self.paths.stats, "stats.json"),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedPaths {
    pub corpus: PathBuf,
    pub docs: PathBuf,
    pub graph: PathBuf,
    pub pairs: PathBuf,
    pub raw: PathBuf,
    pub checkpoint: PathBuf,
    pub dataset: PathBuf,
    pub stats: PathBuf,
}
