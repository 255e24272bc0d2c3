//! The retrieve, summarize, generate pipeline over the retriever x model
//! grid.
//!
//! For each hate-speech instance and each RAG retriever, the top-k evidence
//! chunks are fetched once, summarized by every generation model, and the
//! summaries are fed back to the same model to produce a grounded
//! counter-speech. The `none` retriever arm prompts each model directly.
//! Every output carries the hash of its exact rendered prompt, and the grid
//! runner persists progress after every instance so an interrupted run can
//! resume without redoing completed cells.

mod grid;
pub mod prompts;

pub use grid::{
    cell_key, generate_cs, load_counter_speech_jsonl, load_run_manifest, run_grid,
    summarize_evidence, CellRecord, CellStatus, FailurePolicy, GridEnv, RunManifest, RunSpec,
    CS_FILE, MANIFEST_FILE, SUMMARIES_FILE,
};
pub use prompts::{
    build_context, enforce_two_sentences, prompt_hash, render_cs_no_rag, render_cs_rag,
    render_summarization, CS_NO_RAG_TEMPLATE, CS_RAG_TEMPLATE, SUMMARIZATION_TEMPLATE,
};

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::index::{Bm25Index, RetrievalResult, RetrieverId, VectorIndex};
use crate::providers::EmbeddingProvider;

/// One summarized evidence paragraph, traceable to its source chunk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceSummary {
    pub hs_id: String,
    pub retriever: RetrieverId,
    pub model_id: String,
    /// Retrieval rank, 1-based, 1..=k.
    pub rank: usize,
    pub chunk_id: String,
    pub doc_id: String,
    pub summary: String,
}

/// One generated counter-speech. RAG outputs carry the three evidence
/// summaries that were in the prompt; the `none` arm carries none.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterSpeech {
    pub hs_id: String,
    pub retriever: RetrieverId,
    pub model_id: String,
    pub text: String,
    pub evidence: Vec<EvidenceSummary>,
    /// SHA-256 of the rendered generation prompt.
    pub prompt_hash: String,
}

impl CounterSpeech {
    pub fn validate(&self) -> Result<(), CoreError> {
        let expected = if self.retriever.is_rag() { 3 } else { 0 };
        if self.evidence.len() != expected {
            return Err(CoreError::validation(format!(
                "counter-speech {}|{}|{}: expected {expected} evidence rows, found {}",
                self.hs_id,
                self.retriever,
                self.model_id,
                self.evidence.len()
            )));
        }
        Ok(())
    }
}

/// The retrieval indexes a grid run draws from. Each dense arm pairs its
/// vector index with the embedding provider used to embed queries; the two
/// dense arms run the same code against different embedding models.
pub struct RetrieverSet<'a> {
    bm25: Option<Bm25Index>,
    dense_a: Option<DenseArm<'a>>,
    dense_b: Option<DenseArm<'a>>,
}

struct DenseArm<'a> {
    index: VectorIndex,
    provider: &'a dyn EmbeddingProvider,
}

impl<'a> RetrieverSet<'a> {
    pub fn new() -> Self {
        RetrieverSet { bm25: None, dense_a: None, dense_b: None }
    }

    pub fn with_bm25(mut self, index: Bm25Index) -> Self {
        self.bm25 = Some(index);
        self
    }

    pub fn with_dense_a(mut self, index: VectorIndex, provider: &'a dyn EmbeddingProvider) -> Self {
        self.dense_a = Some(DenseArm { index, provider });
        self
    }

    pub fn with_dense_b(mut self, index: VectorIndex, provider: &'a dyn EmbeddingProvider) -> Self {
        self.dense_b = Some(DenseArm { index, provider });
        self
    }

    /// Whether retrieval for `retriever` can be served. The `none` arm needs
    /// no index and is always supported.
    pub fn supports(&self, retriever: RetrieverId) -> bool {
        match retriever {
            RetrieverId::Bm25 => self.bm25.is_some(),
            RetrieverId::DenseA => self.dense_a.is_some(),
            RetrieverId::DenseB => self.dense_b.is_some(),
            RetrieverId::None => true,
        }
    }

    pub fn retrieve(
        &self,
        retriever: RetrieverId,
        query: &str,
        k: usize,
    ) -> Result<Vec<RetrievalResult>, CoreError> {
        let missing =
            || CoreError::config(format!("no index loaded for retriever {retriever}"));
        match retriever {
            RetrieverId::Bm25 => self.bm25.as_ref().ok_or_else(missing)?.top_k(query, k),
            RetrieverId::DenseA => {
                let arm = self.dense_a.as_ref().ok_or_else(missing)?;
                arm.index.top_k(query, arm.provider, k, RetrieverId::DenseA)
            }
            RetrieverId::DenseB => {
                let arm = self.dense_b.as_ref().ok_or_else(missing)?;
                arm.index.top_k(query, arm.provider, k, RetrieverId::DenseB)
            }
            RetrieverId::None => {
                Err(CoreError::validation("the none arm does not retrieve evidence"))
            }
        }
    }
}

impl<'a> Default for RetrieverSet<'a> {
    fn default() -> Self {
        Self::new()
    }
}
