//! Core library for a retrieval-augmented counter-speech pipeline.
//!
//! The crate is organized around the stages of the pipeline:
//!
//! - [`corpus`]: knowledge-base ingestion, normalization, chunking, and the
//!   hate-speech dataset loader, plus a paginated-listing crawler.
//! - [`index`]: BM25 and dense (cosine) retrieval over chunks, with versioned
//!   on-disk snapshots.
//! - [`providers`]: chat / embedding / moderation provider traits, an
//!   OpenAI-compatible HTTP client, deterministic offline stubs, and a
//!   record/replay layer.
//! - [`pipeline`]: prompt templates and the retrieve -> summarize -> generate
//!   grid runner with resumable, deterministic artifacts.
//! - [`metrics`]: reference-based and diversity metrics (BLEU-4, ROUGE-L,
//!   METEOR, BERTScore-style F1, Distinct-n, repetition rate, safety).
//! - [`judge`]: LLM-as-judge pairwise comparison harness and win tallies.
//! - [`stats`]: Friedman / Wilcoxon / Bonferroni significance tests and
//!   human-annotation aggregation.
//!
//! Everything that writes artifacts uses ordered maps and explicit sorting so
//! that a rerun with the same inputs and seed produces byte-identical files.

pub mod corpus;
pub mod error;
pub mod hashing;
pub mod index;
pub mod judge;
pub mod metrics;
pub mod pipeline;
pub mod providers;
pub mod stats;
pub mod text;

pub use error::CoreError;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, CoreError>;
