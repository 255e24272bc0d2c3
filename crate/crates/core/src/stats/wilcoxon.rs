//! Two-sided Wilcoxon signed-rank test for paired samples.

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::stats::{ln_normal_cdf_neg, midranks, normal_cdf};

/// Largest n for which the exact null distribution is enumerated; beyond
/// it the normal approximation takes over.
pub const EXACT_LIMIT: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PValueMethod {
    Exact,
    NormalApprox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// min(W+, W-), the conventional test statistic.
    pub statistic: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    /// Pairs that entered the test after zero differences were dropped.
    pub n_used: usize,
    pub zeros_dropped: usize,
    pub p_value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log10_p: Option<f64>,
    pub method: PValueMethod,
}

/// Paired two-sided test of `a` against `b`. Zero differences are dropped
/// and counted. With n <= 12 surviving pairs the p-value enumerates all 2^n
/// sign assignments over the midranks of |d|; larger n uses the normal
/// approximation with tie and continuity corrections.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult, CoreError> {
    if a.len() != b.len() {
        return Err(CoreError::validation(format!(
            "paired samples differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(CoreError::validation("wilcoxon: empty samples"));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(CoreError::validation("wilcoxon: non-finite value"));
    }

    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let zeros_dropped = a.len() - diffs.len();
    if diffs.is_empty() {
        return Ok(WilcoxonResult {
            statistic: 0.0,
            w_plus: 0.0,
            w_minus: 0.0,
            n_used: 0,
            zeros_dropped,
            p_value: 1.0,
            log10_p: None,
            method: PValueMethod::Exact,
        });
    }

    let magnitudes: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let (ranks, tie_term) = midranks(&magnitudes);
    let w_plus: f64 =
        diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| *r).sum();
    let n = diffs.len();
    let total = (n * (n + 1) / 2) as f64;
    let w_minus = total - w_plus;
    let statistic = w_plus.min(w_minus);

    let (p_value, log10_p, method) = if n <= EXACT_LIMIT {
        (exact_p(&ranks, w_plus), None, PValueMethod::Exact)
    } else {
        let (p, log10) = normal_approx_p(statistic, n, tie_term);
        (p, log10, PValueMethod::NormalApprox)
    };
    Ok(WilcoxonResult {
        statistic,
        w_plus,
        w_minus,
        n_used: n,
        zeros_dropped,
        p_value,
        log10_p,
        method,
    })
}

/// Exact two-sided p: over all 2^n sign assignments, twice the smaller tail
/// around the observed W+, capped at 1.
fn exact_p(ranks: &[f64], w_plus: f64) -> f64 {
    let n = ranks.len();
    let assignments = 1u64 << n;
    let mut at_most = 0u64;
    let mut at_least = 0u64;
    for mask in 0..assignments {
        let w: f64 = ranks
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, r)| *r)
            .sum();
        if w <= w_plus + 1e-9 {
            at_most += 1;
        }
        if w >= w_plus - 1e-9 {
            at_least += 1;
        }
    }
    let tail = at_most.min(at_least) as f64 / assignments as f64;
    (2.0 * tail).min(1.0)
}

fn normal_approx_p(statistic: f64, n: usize, tie_term: f64) -> (f64, Option<f64>) {
    let nf = n as f64;
    let mu = nf * (nf + 1.0) / 4.0;
    let variance = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    if variance <= 0.0 {
        return (1.0, None);
    }
    let z = (statistic - mu + 0.5) / variance.sqrt();
    if z >= 0.0 {
        return (1.0, None);
    }
    let p = (2.0 * normal_cdf(z)).min(1.0);
    if p > 0.0 {
        (p, None)
    } else {
        let log10 = (std::f64::consts::LN_2 + ln_normal_cdf_neg(z)) / std::f64::consts::LN_10;
        (0.0, Some(log10))
    }
}
