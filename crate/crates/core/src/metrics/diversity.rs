//! Corpus-level diversity and repetition measures.

use std::collections::HashSet;

use crate::error::CoreError;
use crate::text;

/// Distinct-n over a pool of outputs: unique n-grams divided by total
/// n-grams, with both counts pooled across all outputs before dividing.
/// Errors when the pool yields no n-grams at all (nothing to measure).
pub fn distinct_n(outputs: &[String], n: usize) -> Result<f64, CoreError> {
    if n == 0 {
        return Err(CoreError::validation("distinct-n: n must be at least 1"));
    }
    if outputs.is_empty() {
        return Err(CoreError::validation("distinct-n: no outputs given"));
    }
    let mut unique: HashSet<Vec<String>> = HashSet::new();
    let mut total = 0usize;
    for out in outputs {
        let tokens = text::tokenize(out);
        for gram in tokens.windows(n) {
            unique.insert(gram.to_vec());
            total += 1;
        }
    }
    if total == 0 {
        return Err(CoreError::validation(format!(
            "distinct-{n}: outputs contain no {n}-grams"
        )));
    }
    Ok(unique.len() as f64 / total as f64)
}

/// Within-output repetition: for one output and order n, the fraction of
/// n-gram positions whose n-gram already occurred earlier in that output.
/// The rate averages over n = 1..=`max_order` within an output, then over
/// outputs. Outputs shorter than n tokens contribute 0 for that order.
pub fn repetition_rate(outputs: &[String], max_order: usize) -> Result<f64, CoreError> {
    if max_order == 0 {
        return Err(CoreError::validation("repetition rate: max_order must be at least 1"));
    }
    if outputs.is_empty() {
        return Err(CoreError::validation("repetition rate: no outputs given"));
    }
    let mut per_output_sum = 0.0;
    for out in outputs {
        let tokens = text::tokenize(out);
        let mut order_sum = 0.0;
        for n in 1..=max_order {
            if tokens.len() < n {
                continue;
            }
            let mut seen: HashSet<&[String]> = HashSet::new();
            let mut repeats = 0usize;
            let mut positions = 0usize;
            for gram in tokens.windows(n) {
                positions += 1;
                if !seen.insert(gram) {
                    repeats += 1;
                }
            }
            order_sum += repeats as f64 / positions as f64;
        }
        per_output_sum += order_sum / max_order as f64;
    }
    Ok(per_output_sum / outputs.len() as f64)
}
