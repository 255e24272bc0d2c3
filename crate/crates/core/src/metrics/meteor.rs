//! METEOR with exact and Porter-stem matching stages.

use crate::metrics::porter;
use crate::text;

/// METEOR score of a candidate against a single reference.
///
/// Unigrams are aligned greedily left to right: first on exact (lowercased)
/// tokens, then on Porter stems for whatever is still unmatched, each
/// candidate token taking the first free reference token. With `m` matches,
/// `P = m/|cand|`, `R = m/|ref|`,
/// `F_mean = P*R / (alpha*P + (1-alpha)*R)`, and the fragmentation penalty is
/// `gamma * (chunks/m)^beta` where `chunks` counts maximal runs of matches
/// contiguous on both sides. Score = `F_mean * (1 - penalty)`.
pub fn meteor(candidate: &str, reference: &str, alpha: f64, beta: f64, gamma: f64) -> f64 {
    let cand = text::tokenize(candidate);
    let refr = text::tokenize(reference);
    if cand.is_empty() || refr.is_empty() {
        return 0.0;
    }

    // matches[i] = Some(j): candidate token i aligned to reference token j.
    let mut matches: Vec<Option<usize>> = vec![None; cand.len()];
    let mut ref_used = vec![false; refr.len()];

    let align = |cand_keys: &[String], ref_keys: &[String], matches: &mut Vec<Option<usize>>, ref_used: &mut Vec<bool>| {
        for i in 0..cand_keys.len() {
            if matches[i].is_some() {
                continue;
            }
            for j in 0..ref_keys.len() {
                if !ref_used[j] && cand_keys[i] == ref_keys[j] {
                    matches[i] = Some(j);
                    ref_used[j] = true;
                    break;
                }
            }
        }
    };

    align(&cand, &refr, &mut matches, &mut ref_used);
    let cand_stems: Vec<String> = cand.iter().map(|t| porter::stem(t)).collect();
    let ref_stems: Vec<String> = refr.iter().map(|t| porter::stem(t)).collect();
    align(&cand_stems, &ref_stems, &mut matches, &mut ref_used);

    let pairs: Vec<(usize, usize)> =
        matches.iter().enumerate().filter_map(|(i, m)| m.map(|j| (i, j))).collect();
    let m = pairs.len() as f64;
    if pairs.is_empty() {
        return 0.0;
    }

    let p = m / cand.len() as f64;
    let r = m / refr.len() as f64;
    let f_mean = p * r / (alpha * p + (1.0 - alpha) * r);

    // pairs are already sorted by candidate position; a chunk breaks whenever
    // the pair is not the (i+1, j+1) successor of the previous one.
    let mut chunks = 1usize;
    for w in pairs.windows(2) {
        let ((i1, j1), (i2, j2)) = (w[0], w[1]);
        if i2 != i1 + 1 || j2 != j1 + 1 {
            chunks += 1;
        }
    }
    let penalty = gamma * (chunks as f64 / m).powf(beta);
    f_mean * (1.0 - penalty)
}
