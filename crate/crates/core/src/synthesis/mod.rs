//! Joint QA synthesis: prompt rendering plus a bounded-concurrency,
//! checkpointed, retrying request scheduler.

pub mod client;
pub mod prompt;

use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use futures::stream::{self, StreamExt};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::corpus::{DocId, DocStore, Document};
use crate::error::{Error, Result};
use crate::jsonl;
use crate::motif::{PairKey, PairRecord, Relation};

pub use client::{
    ChatClient, ChatRequest, ChatResponse, ClientError, HttpChatClient, MockChatClient,
};
pub use prompt::{
    render_cross_doc_prompt, render_single_doc_prompt, render_three_doc_prompt, truncate_passage,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthesisMode {
    #[default]
    CrossDoc,
    SingleDoc,
    ThreeDoc,
}

impl std::str::FromStr for SynthesisMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cross_doc" => Ok(SynthesisMode::CrossDoc),
            "single_doc" => Ok(SynthesisMode::SingleDoc),
            "three_doc" => Ok(SynthesisMode::ThreeDoc),
            other => Err(Error::Config(format!("unknown synthesis mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthesisParams {
    pub temperature: f64,
    pub top_p: f64,
    pub max_output_tokens: u64,
    pub model_name: String,
    pub passage_char_limit: usize,
    /// QA instances kept per completion.
    pub qa_per_pair: usize,
    pub mode: SynthesisMode,
}

impl Default for SynthesisParams {
    fn default() -> Self {
        Self {
            temperature: 0.7,
            top_p: 0.8,
            max_output_tokens: 32_768,
            model_name: "Qwen3-30B-A3B-Instruct-FP8".into(),
            passage_char_limit: 50_000,
            qa_per_pair: 1,
            mode: SynthesisMode::CrossDoc,
        }
    }
}

impl SynthesisParams {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return fail(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            ));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return fail(format!("top_p must be in (0, 1], got {}", self.top_p));
        }
        if self.passage_char_limit == 0 {
            return fail("passage_char_limit must be positive".into());
        }
        if self.qa_per_pair == 0 {
            return fail("qa_per_pair must be at least 1".into());
        }
        Ok(())
    }
}

/// Exponential backoff with multiplicative jitter.
#[derive(Debug, Clone, PartialEq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub factor: f64,
    /// Each delay is scaled by a uniform factor in `[1 - jitter, 1 + jitter]`.
    pub jitter: f64,
    /// Makes the jitter a pure function of (seed, salt, attempt).
    pub seed: Option<u64>,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 6,
            base_delay: Duration::from_secs(1),
            factor: 2.0,
            jitter: 0.2,
            seed: None,
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `attempt` (1-based count of failures so far).
    /// `salt` distinguishes callers when a seed is set.
    pub fn delay(&self, attempt: u32, salt: u64) -> Duration {
        let nominal = self.base_delay.as_secs_f64() * self.factor.powi(attempt as i32 - 1);
        let range = 1.0 - self.jitter..=1.0 + self.jitter;
        let scale = match self.seed {
            _ if self.jitter <= 0.0 => 1.0,
            Some(seed) => {
                let mixed = seed ^ salt.rotate_left(17) ^ (attempt as u64).rotate_left(43);
                StdRng::seed_from_u64(mixed).gen_range(range)
            }
            None => rand::thread_rng().gen_range(range),
        };
        Duration::from_secs_f64((nominal * scale).max(0.0))
    }
}

/// Pair identity carried through synthesis into the dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairMeta {
    pub a: DocId,
    pub b: DocId,
    pub relation: Relation,
    pub hub: Option<DocId>,
    pub a_title: String,
    pub b_title: String,
    pub hub_title: Option<String>,
}

impl PairMeta {
    pub fn key(&self) -> PairKey {
        PairKey::new(self.a, self.b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawCompletion {
    pub pair: PairMeta,
    pub prompt_chars: u64,
    pub completion_text: String,
    pub latency_ms: u64,
    pub attempt: u32,
    pub endpoint_finish_reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedPair {
    pub pair: PairMeta,
    pub attempts: u32,
    pub error: String,
}

/// One line of the raw-completions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SynthesisRecord {
    Ok(RawCompletion),
    Failed(FailedPair),
}

impl SynthesisRecord {
    pub fn pair(&self) -> &PairMeta {
        match self {
            SynthesisRecord::Ok(c) => &c.pair,
            SynthesisRecord::Failed(f) => &f.pair,
        }
    }
}

fn pair_meta(pair: &PairRecord, docs: &DocStore) -> PairMeta {
    PairMeta {
        a: pair.a,
        b: pair.b,
        relation: pair.relation,
        hub: pair.hub,
        a_title: pair.a_title.clone(),
        b_title: pair.b_title.clone(),
        hub_title: pair.hub.and_then(|h| docs.get(h)).map(|d| d.title.clone()),
    }
}

fn resolve(docs: &DocStore, id: DocId) -> Result<&Document> {
    docs.get(id)
        .ok_or_else(|| Error::precondition(format!("document {id} not in the document store")))
}

/// Renders the prompt for `pair` under `params.mode`.
pub fn render_prompt(
    pair: &PairRecord,
    docs: &DocStore,
    params: &SynthesisParams,
) -> Result<String> {
    let limit = params.passage_char_limit;
    let a = resolve(docs, pair.a)?;
    match params.mode {
        SynthesisMode::SingleDoc => render_single_doc_prompt(a, limit),
        SynthesisMode::CrossDoc => render_cross_doc_prompt(a, resolve(docs, pair.b)?, limit),
        SynthesisMode::ThreeDoc => {
            let hub = pair.hub.map(|h| resolve(docs, h)).transpose()?;
            render_three_doc_prompt(a, resolve(docs, pair.b)?, hub, limit)
        }
    }
}

/// Sends one pair to the endpoint, retrying transient failures. Never returns an
/// error: failures become [`SynthesisRecord::Failed`].
pub async fn synthesize_pair(
    client: &dyn ChatClient,
    pair: &PairRecord,
    docs: &DocStore,
    params: &SynthesisParams,
    retry: &RetryPolicy,
) -> SynthesisRecord {
    let meta = pair_meta(pair, docs);
    let prompt = match render_prompt(pair, docs, params) {
        Ok(p) => p,
        Err(err) => {
            return SynthesisRecord::Failed(FailedPair {
                pair: meta,
                attempts: 0,
                error: err.to_string(),
            })
        }
    };
    let prompt_chars = prompt.chars().count() as u64;
    let request = ChatRequest::user_prompt(
        prompt,
        &params.model_name,
        params.temperature,
        params.top_p,
        params.max_output_tokens,
    );

    let max_attempts = retry.max_attempts.max(1);
    let mut attempt = 0;
    loop {
        attempt += 1;
        let started = Instant::now();
        match client.chat(&request).await {
            Ok(resp) => {
                return SynthesisRecord::Ok(RawCompletion {
                    pair: meta,
                    prompt_chars,
                    completion_text: resp.content,
                    latency_ms: started.elapsed().as_millis() as u64,
                    attempt,
                    endpoint_finish_reason: resp.finish_reason,
                })
            }
            Err(err) if err.is_retryable() && attempt < max_attempts => {
                let salt = (u64::from(meta.a) << 32) | u64::from(meta.b);
                let delay = retry.delay(attempt, salt);
                log::debug!(
                    "pair {} attempt {attempt} failed ({err}); retrying in {delay:?}",
                    meta.key()
                );
                tokio::time::sleep(delay).await;
            }
            Err(err) => {
                log::warn!(
                    "pair {} failed after {attempt} attempt(s): {err}",
                    meta.key()
                );
                return SynthesisRecord::Failed(FailedPair {
                    pair: meta,
                    attempts: attempt,
                    error: err.to_string(),
                });
            }
        }
    }
}

/// Resume state persisted next to the raw-completions file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checkpoint {
    /// Number of leading pairs of the input stream already written.
    pub pairs_completed: u64,
    pub last_pair_key: Option<String>,
    pub output_bytes_written: u64,
}

impl Checkpoint {
    pub fn load(path: &Path) -> Result<Option<Self>> {
        match std::fs::read_to_string(path) {
            Ok(text) => serde_json::from_str(&text)
                .map(Some)
                .map_err(|e| Error::CheckpointMismatch(format!("unreadable checkpoint: {e}"))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(Error::io_path("cannot read", path, e)),
        }
    }

    /// Writes via a temporary file and rename so a crash never leaves a torn checkpoint.
    pub fn store(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        let body = serde_json::to_vec_pretty(self).expect("checkpoint serializes");
        std::fs::write(&tmp, body).map_err(|e| Error::io_path("cannot write", &tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io_path("cannot replace", path, e))
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub concurrency: usize,
    pub checkpoint_every: u64,
    /// Process at most this many not-yet-completed pairs.
    pub limit: Option<u64>,
    pub retry: RetryPolicy,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            concurrency: 16,
            checkpoint_every: 100,
            limit: None,
            retry: RetryPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthesisReport {
    pub requested: u64,
    pub succeeded: u64,
    pub failed: u64,
    pub skipped_by_checkpoint: u64,
}

#[derive(Debug, Clone)]
pub struct RunPaths {
    pub output: PathBuf,
    pub checkpoint: PathBuf,
}

fn open_output(path: &Path, checkpoint: &Checkpoint) -> Result<File> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io_path("cannot create", parent, e))?;
    }
    if checkpoint.pairs_completed == 0 {
        return File::create(path).map_err(|e| Error::io_path("cannot create", path, e));
    }
    let file = OpenOptions::new()
        .write(true)
        .open(path)
        .map_err(|e| Error::io_path("cannot reopen", path, e))?;
    let len = file
        .metadata()
        .map_err(|e| Error::io_path("cannot stat", path, e))?
        .len();
    if len < checkpoint.output_bytes_written {
        return Err(Error::CheckpointMismatch(format!(
            "{} has {len} bytes but the checkpoint recorded {}",
            path.display(),
            checkpoint.output_bytes_written
        )));
    }
    // Drop anything written after the last checkpoint.
    file.set_len(checkpoint.output_bytes_written)
        .map_err(|e| Error::io_path("cannot truncate", path, e))?;
    let mut file = file;
    use std::io::Seek;
    file.seek(std::io::SeekFrom::End(0))
        .map_err(|e| Error::io_path("cannot seek", path, e))?;
    Ok(file)
}

/// Synthesizes every pair not already covered by the checkpoint, appending
/// records to `paths.output` in input order.
pub async fn run_synthesis(
    pairs: &[PairRecord],
    docs: &DocStore,
    client: Arc<dyn ChatClient>,
    params: &SynthesisParams,
    options: &RunOptions,
    paths: &RunPaths,
) -> Result<SynthesisReport> {
    params.validate()?;
    if options.concurrency == 0 {
        return Err(Error::Config("concurrency must be at least 1".into()));
    }

    let mut checkpoint = Checkpoint::load(&paths.checkpoint)?.unwrap_or_default();
    let done = usize::try_from(checkpoint.pairs_completed).unwrap_or(usize::MAX);
    if done > pairs.len() {
        return Err(Error::CheckpointMismatch(format!(
            "checkpoint covers {done} pairs but the input has {}",
            pairs.len()
        )));
    }
    if done > 0 {
        let expected = PairKey::new(pairs[done - 1].a, pairs[done - 1].b).to_string();
        if checkpoint.last_pair_key.as_deref() != Some(expected.as_str()) {
            return Err(Error::CheckpointMismatch(format!(
                "last completed pair is {:?}, input has {expected} at that position",
                checkpoint.last_pair_key
            )));
        }
    }

    let file = open_output(&paths.output, &checkpoint)?;
    let mut writer = BufWriter::new(file);
    // Fails early if the checkpoint location is not writable.
    checkpoint.store(&paths.checkpoint)?;

    let mut report = SynthesisReport {
        skipped_by_checkpoint: done as u64,
        ..SynthesisReport::default()
    };
    let remaining = &pairs[done..];
    let take = options
        .limit
        .map_or(remaining.len(), |l| remaining.len().min(l as usize));
    let remaining = &remaining[..take];

    let client = client.as_ref();
    let mut results = stream::iter(remaining.iter())
        .map(|pair| synthesize_pair(client, pair, docs, params, &options.retry))
        .buffered(options.concurrency);

    let every = options.checkpoint_every.max(1);
    let mut since_checkpoint = 0;
    while let Some(record) = results.next().await {
        let written = jsonl::write_line(&mut writer, &record)?;
        report.requested += 1;
        match &record {
            SynthesisRecord::Ok(_) => report.succeeded += 1,
            SynthesisRecord::Failed(_) => report.failed += 1,
        }
        checkpoint.pairs_completed += 1;
        checkpoint.last_pair_key = Some(record.pair().key().to_string());
        checkpoint.output_bytes_written += written as u64;
        since_checkpoint += 1;
        if since_checkpoint >= every {
            flush(&mut writer, &paths.output)?;
            checkpoint.store(&paths.checkpoint)?;
            since_checkpoint = 0;
        }
    }
    flush(&mut writer, &paths.output)?;
    checkpoint.store(&paths.checkpoint)?;
    Ok(report)
}

fn flush(writer: &mut BufWriter<File>, path: &Path) -> Result<()> {
    writer
        .flush()
        .and_then(|_| writer.get_ref().sync_data())
        .map_err(|e| Error::io_path("cannot flush", path, e))
}

/// Reads a raw-completions file.
pub fn read_records(path: &Path) -> Result<Vec<SynthesisRecord>> {
    jsonl::read_all(path)
}
