//! Retrieval over corpus chunks: lexical BM25 and dense cosine search, with
//! versioned on-disk snapshots.

mod bm25;
mod dense;
mod snapshot;

pub use bm25::{Bm25Index, Bm25Params};
pub use dense::VectorIndex;
pub use snapshot::{load_snapshot, save_snapshot, IndexKind, SnapshotHeader, SNAPSHOT_FORMAT_VERSION};

use serde::{Deserialize, Serialize};

/// The retrieval arms of the experiment grid. The two dense arms share one
/// implementation and differ only in embedding model; NONE is the no-retrieval
/// baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RetrieverId {
    Bm25,
    DenseA,
    DenseB,
    None,
}

impl RetrieverId {
    pub fn as_str(self) -> &'static str {
        match self {
            RetrieverId::Bm25 => "bm25",
            RetrieverId::DenseA => "dense_a",
            RetrieverId::DenseB => "dense_b",
            RetrieverId::None => "none",
        }
    }

    pub fn parse(s: &str) -> Result<Self, crate::CoreError> {
        match s.trim().to_lowercase().as_str() {
            "bm25" => Ok(RetrieverId::Bm25),
            "dense_a" => Ok(RetrieverId::DenseA),
            "dense_b" => Ok(RetrieverId::DenseB),
            "none" => Ok(RetrieverId::None),
            other => Err(crate::CoreError::validation(format!("unknown retriever {other:?}"))),
        }
    }

    /// Whether this arm retrieves evidence at all.
    pub fn is_rag(self) -> bool {
        self != RetrieverId::None
    }
}

impl std::fmt::Display for RetrieverId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One ranked hit. `rank` is 1-based; ties on score break by ascending
/// chunk id, so rankings are total and reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub chunk_id: String,
    pub doc_id: String,
    pub score: f64,
    pub rank: usize,
    pub retriever: RetrieverId,
}

/// Shared tie-break: descending score, then ascending chunk id.
pub(crate) fn sort_hits(hits: &mut [(f64, usize)], ids: &[String]) {
    hits.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| ids[a.1].cmp(&ids[b.1]))
    });
}
