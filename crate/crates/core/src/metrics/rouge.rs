//! ROUGE-L: longest common subsequence F-measure.

use crate::text;

/// ROUGE-L F-score with recall weight `beta`:
/// `F = (1 + beta^2) * P * R / (R + beta^2 * P)` where `P = LCS/|cand|` and
/// `R = LCS/|ref|`. Zero when either side is empty or nothing aligns.
pub fn rouge_l(candidate: &str, reference: &str, beta: f64) -> f64 {
    let cand = text::tokenize(candidate);
    let refr = text::tokenize(reference);
    if cand.is_empty() || refr.is_empty() {
        return 0.0;
    }
    let lcs = lcs_len(&cand, &refr) as f64;
    if lcs == 0.0 {
        return 0.0;
    }
    let p = lcs / cand.len() as f64;
    let r = lcs / refr.len() as f64;
    let b2 = beta * beta;
    (1.0 + b2) * p * r / (r + b2 * p)
}

/// Classic O(|a|*|b|) dynamic program with a two-row window.
fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for ai in a {
        for (j, bj) in b.iter().enumerate() {
            cur[j + 1] = if ai == bj { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}
