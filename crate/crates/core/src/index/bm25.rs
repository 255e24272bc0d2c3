//! Okapi BM25 over the shared tokenizer.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::Chunk;
use crate::error::CoreError;
use crate::index::{sort_hits, RetrievalResult, RetrieverId};
use crate::text;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.2, b: 0.75 }
    }
}

impl Bm25Params {
    pub fn validate(&self) -> Result<(), CoreError> {
        if !(self.k1 > 0.0 && self.k1.is_finite()) {
            return Err(CoreError::validation(format!("bm25: k1 must be positive, got {}", self.k1)));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(CoreError::validation(format!("bm25: b must be in [0, 1], got {}", self.b)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ChunkEntry {
    chunk_id: String,
    doc_id: String,
    len: usize,
}

/// Inverted index with document-frequency statistics.
///
/// Scoring uses `IDF(t) = ln((N - df + 0.5) / (df + 0.5) + 1)`, which is
/// strictly positive, and the usual tf saturation
/// `tf * (k1 + 1) / (tf + k1 * (1 - b + b * len / avg_len))`. Repeated query
/// terms contribute once per occurrence.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Bm25Index {
    params: Bm25Params,
    /// term -> (chunk index, term frequency), chunk indices ascending.
    postings: BTreeMap<String, Vec<(usize, u32)>>,
    /// Sorted by chunk id, so index order is also the tie-break order.
    chunks: Vec<ChunkEntry>,
    avg_len: f64,
}

impl Bm25Index {
    pub fn build(chunks: &[Chunk], params: Bm25Params) -> Result<Self, CoreError> {
        params.validate()?;
        if chunks.is_empty() {
            return Err(CoreError::validation("bm25: cannot index an empty chunk set"));
        }
        let mut order: Vec<&Chunk> = chunks.iter().collect();
        order.sort_by(|a, b| a.chunk_id.cmp(&b.chunk_id));
        for pair in order.windows(2) {
            if pair[0].chunk_id == pair[1].chunk_id {
                return Err(CoreError::validation(format!(
                    "bm25: duplicate chunk id {}",
                    pair[0].chunk_id
                )));
            }
        }

        let mut postings: BTreeMap<String, Vec<(usize, u32)>> = BTreeMap::new();
        let mut entries = Vec::with_capacity(order.len());
        let mut total_len = 0usize;
        for (idx, chunk) in order.iter().enumerate() {
            let tokens = text::tokenize(&chunk.text);
            total_len += tokens.len();
            let mut tf: BTreeMap<String, u32> = BTreeMap::new();
            for t in tokens.iter() {
                *tf.entry(t.clone()).or_insert(0) += 1;
            }
            for (term, count) in tf {
                postings.entry(term).or_default().push((idx, count));
            }
            entries.push(ChunkEntry {
                chunk_id: chunk.chunk_id.clone(),
                doc_id: chunk.doc_id.clone(),
                len: tokens.len(),
            });
        }
        Ok(Bm25Index {
            params,
            postings,
            avg_len: total_len as f64 / entries.len() as f64,
            chunks: entries,
        })
    }

    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn avg_len(&self) -> f64 {
        self.avg_len
    }

    /// Document frequency of a (raw) term.
    pub fn df(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    pub fn chunk_ids(&self) -> impl Iterator<Item = &str> {
        self.chunks.iter().map(|c| c.chunk_id.as_str())
    }

    fn idf(&self, df: usize) -> f64 {
        let n = self.chunks.len() as f64;
        (((n - df as f64 + 0.5) / (df as f64 + 0.5)) + 1.0).ln()
    }

    fn score_idx(&self, query_tokens: &[String], idx: usize) -> f64 {
        let entry = &self.chunks[idx];
        let norm_len = 1.0 - self.params.b + self.params.b * entry.len as f64 / self.avg_len;
        let mut score = 0.0;
        for token in query_tokens {
            let Some(list) = self.postings.get(token) else { continue };
            let Ok(pos) = list.binary_search_by_key(&idx, |&(i, _)| i) else { continue };
            let tf = list[pos].1 as f64;
            let idf = self.idf(list.len());
            score += idf * tf * (self.params.k1 + 1.0) / (tf + self.params.k1 * norm_len);
        }
        score
    }

    /// BM25 score of `query` against one chunk.
    pub fn score(&self, query: &str, chunk_id: &str) -> Result<f64, CoreError> {
        let tokens = text::tokenize(query);
        if tokens.is_empty() {
            return Err(CoreError::validation("bm25: query has no tokens"));
        }
        let idx = self
            .chunks
            .binary_search_by(|c| c.chunk_id.as_str().cmp(chunk_id))
            .map_err(|_| CoreError::validation(format!("bm25: unknown chunk id {chunk_id:?}")))?;
        Ok(self.score_idx(&tokens, idx))
    }

    /// Top `k` chunks for `query`. Always returns exactly `min(k, len)`
    /// results: when fewer than `k` chunks match any query term, the ranking
    /// is padded with zero-score chunks in ascending chunk-id order.
    pub fn top_k(&self, query: &str, k: usize) -> Result<Vec<RetrievalResult>, CoreError> {
        let tokens = text::tokenize(query);
        if tokens.is_empty() {
            return Err(CoreError::validation("bm25: query has no tokens"));
        }
        let want = k.min(self.chunks.len());

        let mut accum: BTreeMap<usize, f64> = BTreeMap::new();
        // Every occurrence of a repeated query term adds its contribution, so
        // scoring per occurrence over per-chunk postings is equivalent to the
        // per-chunk formula.
        for token in &tokens {
            if let Some(list) = self.postings.get(token) {
                let idf = self.idf(list.len());
                for &(idx, tf) in list {
                    let entry = &self.chunks[idx];
                    let norm_len =
                        1.0 - self.params.b + self.params.b * entry.len as f64 / self.avg_len;
                    let tf = tf as f64;
                    let part =
                        idf * tf * (self.params.k1 + 1.0) / (tf + self.params.k1 * norm_len);
                    *accum.entry(idx).or_insert(0.0) += part;
                }
            }
        }

        let ids: Vec<String> = self.chunks.iter().map(|c| c.chunk_id.clone()).collect();
        let mut hits: Vec<(f64, usize)> = accum.iter().map(|(&i, &s)| (s, i)).collect();
        sort_hits(&mut hits, &ids);
        hits.truncate(want);
        if hits.len() < want {
            // Pad with unmatched chunks; index order is chunk-id order.
            let mut matched: Vec<bool> = vec![false; self.chunks.len()];
            for &(_, i) in &hits {
                matched[i] = true;
            }
            for (i, seen) in matched.iter().enumerate() {
                if hits.len() == want {
                    break;
                }
                if !seen && !accum.contains_key(&i) {
                    hits.push((0.0, i));
                }
            }
        }

        Ok(hits
            .into_iter()
            .enumerate()
            .map(|(rank, (score, idx))| RetrievalResult {
                chunk_id: self.chunks[idx].chunk_id.clone(),
                doc_id: self.chunks[idx].doc_id.clone(),
                score,
                rank: rank + 1,
                retriever: RetrieverId::Bm25,
            })
            .collect())
    }
}
