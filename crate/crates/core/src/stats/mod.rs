//! Significance testing over per-sample metric values and aggregation of
//! human annotation studies.

mod annotations;
mod friedman;
mod report;
mod wilcoxon;

pub use annotations::{
    aggregate_annotations, annotation_table_csv, read_annotations_csv, AnnotationRecord,
    AnnotationReport, MethodSummary, ANNOTATION_COLUMNS,
};
pub use friedman::{friedman_test, FriedmanResult};
pub use report::{significance_report, PairwiseComparison, StatsFamily, StatsReport};
pub use wilcoxon::{wilcoxon_signed_rank, PValueMethod, WilcoxonResult};

use crate::error::CoreError;

/// Per-sample values for two or more systems, aligned row-wise: row i holds
/// every system's value for the same sample.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSamples {
    systems: Vec<String>,
    values: Vec<Vec<f64>>,
}

impl PairedSamples {
    pub fn new(systems: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self, CoreError> {
        if systems.len() < 2 {
            return Err(CoreError::validation("paired samples need at least 2 systems"));
        }
        let unique: std::collections::BTreeSet<_> = systems.iter().collect();
        if unique.len() != systems.len() {
            return Err(CoreError::validation("duplicate system id in paired samples"));
        }
        if values.len() < 2 {
            return Err(CoreError::validation("paired samples need at least 2 rows"));
        }
        for (i, row) in values.iter().enumerate() {
            if row.len() != systems.len() {
                return Err(CoreError::validation(format!(
                    "row {i} has {} values for {} systems",
                    row.len(),
                    systems.len()
                )));
            }
            if let Some(bad) = row.iter().find(|v| !v.is_finite()) {
                return Err(CoreError::validation(format!("row {i} has non-finite value {bad}")));
            }
        }
        Ok(PairedSamples { systems, values })
    }

    pub fn systems(&self) -> &[String] {
        &self.systems
    }

    pub fn n_samples(&self) -> usize {
        self.values.len()
    }

    pub fn n_systems(&self) -> usize {
        self.systems.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// The two columns for systems `i` and `j`, in row order.
    pub fn column_pair(&self, i: usize, j: usize) -> (Vec<f64>, Vec<f64>) {
        let a = self.values.iter().map(|r| r[i]).collect();
        let b = self.values.iter().map(|r| r[j]).collect();
        (a, b)
    }
}

/// Bonferroni adjustment: p_adj = min(1, p * m). `m` must cover at least
/// the number of comparisons supplied.
pub fn bonferroni(p_values: &[f64], m: usize) -> Result<Vec<f64>, CoreError> {
    if m < p_values.len() {
        return Err(CoreError::validation(format!(
            "bonferroni m = {m} is smaller than the {} comparisons",
            p_values.len()
        )));
    }
    let mut out = Vec::with_capacity(p_values.len());
    for &p in p_values {
        if !(0.0..=1.0).contains(&p) {
            return Err(CoreError::validation(format!("p-value {p} outside [0, 1]")));
        }
        out.push((p * m as f64).min(1.0));
    }
    Ok(out)
}

/// Round half-up to `decimals` places: floor(x * 10^d + 0.5) / 10^d,
/// applied to the binary double as stored.
pub fn round_half_up(x: f64, decimals: u32) -> f64 {
    let factor = 10f64.powi(decimals as i32);
    (x * factor + 0.5).floor() / factor
}

/// Midranks of `values` (1-based, ties averaged) plus the tie term
/// sum(t^3 - t) over tie groups, which both tests use for corrections.
pub(crate) fn midranks(values: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; values.len()];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    (ranks, tie_term)
}

/// Upper tail of the chi-squared distribution with `df` degrees of freedom.
pub(crate) fn chi2_sf(x: f64, df: usize) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    statrs::function::gamma::gamma_ur(df as f64 / 2.0, x / 2.0)
}

/// Natural log of the chi-squared upper tail, usable far past f64
/// underflow. Continued-fraction expansion of the upper incomplete gamma;
/// accurate for x above the mean, which is the only region where the direct
/// computation underflows.
pub(crate) fn ln_chi2_sf(x: f64, df: usize) -> f64 {
    let a = df as f64 / 2.0;
    let x = x / 2.0;
    if x <= a + 1.0 {
        return chi2_sf(2.0 * x, df).ln();
    }
    ln_gamma_q(a, x)
}

/// ln Q(a, x) for x > a + 1 via the Lentz continued fraction.
fn ln_gamma_q(a: f64, x: f64) -> f64 {
    const FPMIN: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-15 {
            break;
        }
    }
    -x + a * x.ln() - statrs::function::gamma::ln_gamma(a) + h.ln()
}

/// Standard normal lower tail.
pub(crate) fn normal_cdf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2)
}

/// ln of the standard normal lower tail for very negative z, where the
/// direct computation underflows. Asymptotic series of Mills' ratio.
pub(crate) fn ln_normal_cdf_neg(z: f64) -> f64 {
    debug_assert!(z < 0.0);
    let t = -z;
    if t < 15.0 {
        return normal_cdf(z).ln();
    }
    let inv2 = 1.0 / (t * t);
    let series = 1.0 - inv2 + 3.0 * inv2 * inv2 - 15.0 * inv2 * inv2 * inv2;
    -0.5 * t * t - (t * (2.0 * std::f64::consts::PI).sqrt()).ln() + series.ln()
}
