//! Embedding-based token-similarity F1 (BERTScore-style, greedy matching).

use crate::error::CoreError;
use crate::providers::EmbeddingProvider;
use crate::text;

/// Greedy-matching embedding F1 between candidate and reference tokens.
///
/// Each token is embedded separately by `provider`. Precision is the mean
/// over candidate tokens of the highest cosine similarity to any reference
/// token; recall mirrors it from the reference side; F1 is their harmonic
/// mean. No IDF weighting and no baseline rescaling. Either side empty
/// scores 0.
pub fn bertscore_f1(
    candidate: &str,
    reference: &str,
    provider: &dyn EmbeddingProvider,
) -> Result<f64, CoreError> {
    let cand_tokens = text::tokenize(candidate);
    let ref_tokens = text::tokenize(reference);
    if cand_tokens.is_empty() || ref_tokens.is_empty() {
        return Ok(0.0);
    }

    let cand_vecs = provider.embed(&cand_tokens)?;
    let ref_vecs = provider.embed(&ref_tokens)?;

    let sim = |a: &[f64], b: &[f64]| -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        if na < 1e-12 || nb < 1e-12 {
            0.0
        } else {
            dot / (na * nb)
        }
    };

    let precision = cand_vecs
        .iter()
        .map(|c| ref_vecs.iter().map(|r| sim(c, r)).fold(f64::MIN, f64::max))
        .sum::<f64>()
        / cand_vecs.len() as f64;
    let recall = ref_vecs
        .iter()
        .map(|r| cand_vecs.iter().map(|c| sim(c, r)).fold(f64::MIN, f64::max))
        .sum::<f64>()
        / ref_vecs.len() as f64;

    if precision + recall <= 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * precision * recall / (precision + recall))
}
