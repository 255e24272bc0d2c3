//! Dense retrieval: exact cosine search over unit-normalized embeddings.

use serde::{Deserialize, Serialize};

use crate::corpus::Chunk;
use crate::error::CoreError;
use crate::index::{sort_hits, RetrievalResult, RetrieverId};
use crate::providers::EmbeddingProvider;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct VecEntry {
    chunk_id: String,
    doc_id: String,
    vector: Vec<f64>,
}

/// Flat (exhaustive) vector index. Vectors are L2-normalized on insert, so
/// cosine similarity is a plain dot product at query time. Exhaustive scan is
/// deliberate: at the corpus sizes in scope it is fast enough, and it is
/// exact, which the retrieval tests rely on.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VectorIndex {
    model_id: String,
    dim: usize,
    /// Sorted by chunk id.
    entries: Vec<VecEntry>,
}

impl VectorIndex {
    /// Embed every chunk with `provider` and build the index.
    pub fn build(
        chunks: &[Chunk],
        provider: &dyn EmbeddingProvider,
    ) -> Result<VectorIndex, CoreError> {
        if chunks.is_empty() {
            return Err(CoreError::validation("dense: cannot index an empty chunk set"));
        }
        let mut order: Vec<&Chunk> = chunks.iter().collect();
        order.sort_by(|a, b| a.chunk_id.cmp(&b.chunk_id));
        for pair in order.windows(2) {
            if pair[0].chunk_id == pair[1].chunk_id {
                return Err(CoreError::validation(format!(
                    "dense: duplicate chunk id {}",
                    pair[0].chunk_id
                )));
            }
        }
        let texts: Vec<String> = order.iter().map(|c| c.text.clone()).collect();
        let vectors = provider.embed(&texts)?;
        if vectors.len() != order.len() {
            return Err(CoreError::incompatible(format!(
                "dense: provider returned {} vectors for {} chunks",
                vectors.len(),
                order.len()
            )));
        }
        let dim = vectors.first().map(Vec::len).unwrap_or(0);
        if dim == 0 {
            return Err(CoreError::incompatible("dense: provider returned empty vectors"));
        }
        let mut entries = Vec::with_capacity(order.len());
        for (chunk, vector) in order.iter().zip(vectors) {
            entries.push(VecEntry {
                chunk_id: chunk.chunk_id.clone(),
                doc_id: chunk.doc_id.clone(),
                vector: normalize(vector, dim, &chunk.chunk_id)?,
            });
        }
        Ok(VectorIndex { model_id: provider.model_id().to_string(), dim, entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn chunk_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.chunk_id.as_str())
    }

    /// Cosine similarity between the stored vector for `chunk_id` and a
    /// query vector (normalized here).
    pub fn score(&self, query_vector: &[f64], chunk_id: &str) -> Result<f64, CoreError> {
        let q = normalize(query_vector.to_vec(), self.dim, "query")?;
        let idx = self
            .entries
            .binary_search_by(|e| e.chunk_id.as_str().cmp(chunk_id))
            .map_err(|_| CoreError::validation(format!("dense: unknown chunk id {chunk_id:?}")))?;
        Ok(dot(&q, &self.entries[idx].vector))
    }

    /// Exact top-k by cosine similarity. The query is embedded with
    /// `provider`, which must be the same embedding model the index was
    /// built with. Returns exactly `min(k, len)` hits; `retriever` tags the
    /// results with the arm this index is serving as.
    pub fn top_k(
        &self,
        query: &str,
        provider: &dyn EmbeddingProvider,
        k: usize,
        retriever: RetrieverId,
    ) -> Result<Vec<RetrievalResult>, CoreError> {
        if query.trim().is_empty() {
            return Err(CoreError::validation("dense: empty query"));
        }
        if provider.model_id() != self.model_id {
            return Err(CoreError::incompatible(format!(
                "dense: index built with embedding model {:?}, query provider is {:?}",
                self.model_id,
                provider.model_id()
            )));
        }
        let embedded = provider.embed(std::slice::from_ref(&query.to_string()))?;
        let q = embedded
            .into_iter()
            .next()
            .ok_or_else(|| CoreError::incompatible("dense: provider returned no query vector"))?;
        let q = normalize(q, self.dim, "query")?;

        let ids: Vec<String> = self.entries.iter().map(|e| e.chunk_id.clone()).collect();
        let mut hits: Vec<(f64, usize)> =
            self.entries.iter().enumerate().map(|(i, e)| (dot(&q, &e.vector), i)).collect();
        sort_hits(&mut hits, &ids);
        hits.truncate(k.min(self.entries.len()));
        Ok(hits
            .into_iter()
            .enumerate()
            .map(|(rank, (score, idx))| RetrievalResult {
                chunk_id: self.entries[idx].chunk_id.clone(),
                doc_id: self.entries[idx].doc_id.clone(),
                score,
                rank: rank + 1,
                retriever,
            })
            .collect())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// L2-normalize, rejecting wrong dimensions, non-finite values, and
/// effectively-zero vectors. Post: |v| = 1 within 1e-6.
fn normalize(mut v: Vec<f64>, dim: usize, what: &str) -> Result<Vec<f64>, CoreError> {
    if v.len() != dim {
        return Err(CoreError::incompatible(format!(
            "dense: vector for {what} has dimension {}, index expects {dim}",
            v.len()
        )));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(CoreError::validation(format!("dense: non-finite embedding for {what}")));
    }
    let norm = dot(&v, &v).sqrt();
    if norm < 1e-12 {
        return Err(CoreError::validation(format!("dense: zero embedding for {what}")));
    }
    for x in &mut v {
        *x /= norm;
    }
    Ok(v)
}
