//! BLEU-4 with additive-epsilon smoothing.

use std::collections::HashMap;

use crate::text;

/// Corpus-style BLEU applied to a single candidate against one or more
/// references.
///
/// Uses clipped n-gram precision up to order `min(4, candidate length)`,
/// geometric mean over the used orders, `epsilon` substituted for any zero
/// precision, and brevity penalty `min(1, exp(1 - r/c))` where `r` is the
/// reference length closest to the candidate length (ties prefer the
/// shorter). Capping the order at the candidate length keeps identity pairs
/// at exactly 1.0 even below four tokens, where higher-order precisions are
/// undefined rather than zero.
pub fn bleu4(candidate: &str, references: &[&str], epsilon: f64) -> f64 {
    let cand = text::tokenize(candidate);
    if cand.is_empty() || references.is_empty() {
        return 0.0;
    }
    let refs: Vec<Vec<String>> = references.iter().map(|r| text::tokenize(r)).collect();

    let max_order = cand.len().min(4);
    let mut log_sum = 0.0;
    for n in 1..=max_order {
        let mut cand_counts: HashMap<&[String], usize> = HashMap::new();
        for gram in cand.windows(n) {
            *cand_counts.entry(gram).or_insert(0) += 1;
        }
        let mut clipped = 0usize;
        let total: usize = cand_counts.values().sum();
        for (gram, &count) in &cand_counts {
            let best_ref = refs
                .iter()
                .map(|r| r.windows(n).filter(|g| g == gram).count())
                .max()
                .unwrap_or(0);
            clipped += count.min(best_ref);
        }
        let p = clipped as f64 / total as f64;
        log_sum += if p > 0.0 { p.ln() } else { epsilon.ln() };
    }
    let precision_mean = (log_sum / max_order as f64).exp();

    let c = cand.len();
    let r = refs
        .iter()
        .map(Vec::len)
        .min_by_key(|&len| (len.abs_diff(c), len))
        .unwrap_or(0);
    let bp = if c >= r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    bp * precision_mean
}
