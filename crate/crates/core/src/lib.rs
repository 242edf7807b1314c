//! Relation mining over encyclopedia hyperlinks and cross-document QA synthesis.
//!
//! The crate is a chain of stages, each usable on its own:
//!
//! | stage | module | artifact |
//! |---|---|---|
//! | ingest | [`corpus`] | `docs.jsonl` |
//! | graph | [`graph`] | `graph.bin` |
//! | discover | [`motif`] | `pairs.jsonl` |
//! | synthesize | [`synthesis`] | `raw.jsonl` + checkpoint |
//! | validate | [`validate`] | `dataset.jsonl` |
//! | stats | [`stats`] | report JSON / table |
//!
//! [`passk`] scores downstream evaluations. [`pipeline`] chains the stages and
//! [`cli`] exposes them as subcommands of the `linksynth` binary.

pub mod cli;
pub mod config;
pub mod corpus;
pub mod error;
pub mod graph;
pub mod jsonl;
pub mod motif;
pub mod passk;
pub mod pipeline;
pub mod stats;
pub mod synthesis;
pub mod validate;

pub use config::PipelineConfig;
pub use corpus::{DocId, DocStore, Document};
pub use error::{Error, Result};
pub use graph::{build_graph, GraphStats, LinkGraph};
pub use motif::{discover, DiscoveryConfig, MotifPair, PairKey, PairRecord, Relation};
pub use passk::{pass_at_k, PassKRecord};
pub use stats::{compute_stats, StatsReport};
pub use synthesis::{run_synthesis, SynthesisMode, SynthesisParams};
pub use validate::{validate, DatasetRecord, ValidationPolicy};
