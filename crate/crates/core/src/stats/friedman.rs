//! Friedman rank test across k paired systems.

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::stats::{chi2_sf, ln_chi2_sf, midranks, PairedSamples};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FriedmanResult {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    /// log10 of the p-value, reported instead of a literal zero when the
    /// tail underflows f64.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log10_p: Option<f64>,
}

/// Friedman chi-squared test over the rows of `samples`. Values are ranked
/// within each row with midranks for ties; the statistic carries the
/// standard tie correction and is referred to the chi-squared distribution
/// with k-1 degrees of freedom.
pub fn friedman_test(samples: &PairedSamples) -> Result<FriedmanResult, CoreError> {
    let n = samples.n_samples() as f64;
    let k = samples.n_systems() as f64;
    let df = samples.n_systems() - 1;

    let mut rank_sums = vec![0.0f64; samples.n_systems()];
    let mut tie_total = 0.0;
    for row in samples.rows() {
        let (ranks, ties) = midranks(row);
        for (sum, rank) in rank_sums.iter_mut().zip(ranks) {
            *sum += rank;
        }
        tie_total += ties;
    }

    let correction = 1.0 - tie_total / (n * k * (k * k - 1.0));
    if correction <= 0.0 {
        return Ok(FriedmanResult { statistic: 0.0, df, p_value: 1.0, log10_p: None });
    }
    let ssbn: f64 = rank_sums.iter().map(|r| r * r).sum();
    let statistic =
        ((12.0 / (k * n * (k + 1.0)) * ssbn - 3.0 * n * (k + 1.0)) / correction).max(0.0);
    let p_value = chi2_sf(statistic, df);
    let log10_p =
        (p_value == 0.0).then(|| ln_chi2_sf(statistic, df) / std::f64::consts::LN_10);
    Ok(FriedmanResult { statistic, df, p_value, log10_p })
}
