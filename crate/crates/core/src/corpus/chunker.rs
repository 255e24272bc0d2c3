//! Paragraph-oriented chunking with token bounds.
//!
//! Paragraphs are merged forward until a chunk reaches `min_tokens`; anything
//! over `max_tokens` is split back down, first at sentence boundaries and, for
//! a single sentence that is still too long, at hard token boundaries.
//! `max_tokens` is a hard ceiling. `min_tokens` is best-effort: a document's
//! final chunk (and the remainder of an oversize split) may come up short,
//! because every token of the source must land in exactly one chunk.

use crate::corpus::{Chunk, Document};
use crate::error::CoreError;
use crate::text;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ChunkPolicy {
    pub min_tokens: usize,
    pub max_tokens: usize,
}

impl Default for ChunkPolicy {
    fn default() -> Self {
        ChunkPolicy { min_tokens: 30, max_tokens: 300 }
    }
}

impl ChunkPolicy {
    pub fn validate(&self) -> Result<(), CoreError> {
        if self.min_tokens == 0 {
            return Err(CoreError::validation("chunk policy: min_tokens must be at least 1"));
        }
        if self.max_tokens < self.min_tokens {
            return Err(CoreError::validation(format!(
                "chunk policy: max_tokens {} below min_tokens {}",
                self.max_tokens, self.min_tokens
            )));
        }
        Ok(())
    }
}

/// Chunk one document. Ordinals are contiguous from zero and the chunk id is
/// `{doc_id}#{ordinal:05}`, which sorts in document order.
pub fn chunk_document(doc: &Document, policy: &ChunkPolicy) -> Result<Vec<Chunk>, CoreError> {
    policy.validate()?;
    let mut pieces: Vec<String> = Vec::new();
    let mut buf = String::new();
    let mut buf_tokens = 0usize;

    for para in text::split_paragraphs(&doc.text) {
        let tokens = text::count_tokens(para);
        if tokens == 0 {
            continue;
        }
        if !buf.is_empty() {
            buf.push_str("\n\n");
        }
        buf.push_str(para);
        buf_tokens += tokens;
        if buf_tokens >= policy.min_tokens {
            flush(std::mem::take(&mut buf), policy.max_tokens, &mut pieces);
            buf_tokens = 0;
        }
    }
    if !buf.is_empty() {
        flush(buf, policy.max_tokens, &mut pieces);
    }

    Ok(pieces
        .into_iter()
        .enumerate()
        .map(|(ordinal, piece)| Chunk {
            chunk_id: format!("{}#{ordinal:05}", doc.meta.id),
            doc_id: doc.meta.id.clone(),
            ordinal,
            token_count: text::count_tokens(&piece),
            text: piece,
        })
        .collect())
}

/// Chunk a batch of documents, concatenating per-document output in input
/// order.
pub fn chunk_documents(docs: &[Document], policy: &ChunkPolicy) -> Result<Vec<Chunk>, CoreError> {
    let mut out = Vec::new();
    for doc in docs {
        out.extend(chunk_document(doc, policy)?);
    }
    Ok(out)
}

fn flush(buf: String, max_tokens: usize, pieces: &mut Vec<String>) {
    if text::count_tokens(&buf) <= max_tokens {
        pieces.push(buf);
    } else {
        split_oversize(&buf, max_tokens, pieces);
    }
}

/// Break `chunk_text` into pieces of at most `max_tokens`, greedily packing
/// whole sentences and falling back to token-boundary cuts for a single
/// sentence that exceeds the cap on its own.
fn split_oversize(chunk_text: &str, max_tokens: usize, pieces: &mut Vec<String>) {
    let sentences = text::sentence_spans(chunk_text);
    let mut group: Option<(usize, usize)> = None;
    let mut group_tokens = 0usize;

    for (s, e) in sentences {
        let sent = &chunk_text[s..e];
        let tokens = text::count_tokens(sent);
        if tokens > max_tokens {
            emit_group(chunk_text, &mut group, &mut group_tokens, pieces);
            hard_split(sent, max_tokens, pieces);
            continue;
        }
        match group {
            Some((gs, _)) if group_tokens + tokens <= max_tokens => {
                group = Some((gs, e));
                group_tokens += tokens;
            }
            Some(_) => {
                emit_group(chunk_text, &mut group, &mut group_tokens, pieces);
                group = Some((s, e));
                group_tokens = tokens;
            }
            None => {
                group = Some((s, e));
                group_tokens = tokens;
            }
        }
    }
    emit_group(chunk_text, &mut group, &mut group_tokens, pieces);
}

fn emit_group(
    chunk_text: &str,
    group: &mut Option<(usize, usize)>,
    group_tokens: &mut usize,
    pieces: &mut Vec<String>,
) {
    if let Some((s, e)) = group.take() {
        pieces.push(chunk_text[s..e].to_string());
    }
    *group_tokens = 0;
}

/// Cut a single overlong sentence at every `max_tokens`-th token boundary.
fn hard_split(sentence: &str, max_tokens: usize, pieces: &mut Vec<String>) {
    let spans = text::token_spans(sentence);
    let mut i = 0;
    while i < spans.len() {
        let last = (i + max_tokens).min(spans.len()) - 1;
        pieces.push(sentence[spans[i].0..spans[last].1].to_string());
        i = last + 1;
    }
}
