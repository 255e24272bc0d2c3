//! Significance report over a metric report: for every model, compare its
//! retriever arms per metric with a Friedman test, then all retriever pairs
//! with Bonferroni-corrected Wilcoxon tests.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::index::RetrieverId;
use crate::metrics::{CellReport, MetricReport, PerOutputScores};
use crate::stats::{
    bonferroni, friedman_test, wilcoxon_signed_rank, FriedmanResult, PValueMethod,
    PairedSamples,
};

/// Reference-based metrics entering significance testing. Diversity metrics
/// are corpus-level, not per-sample, so they are excluded; safety joins
/// when every compared output has a score.
const TESTED_METRICS: [&str; 4] = ["bleu4", "rouge_l", "meteor", "bertscore_f1"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseComparison {
    pub retriever_a: RetrieverId,
    pub retriever_b: RetrieverId,
    pub statistic: f64,
    pub p_value: f64,
    pub p_adjusted: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log10_p: Option<f64>,
    pub zeros_dropped: usize,
    pub method: PValueMethod,
}

/// One (model, metric) family: the Friedman omnibus over all arms plus the
/// corrected pairwise tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsFamily {
    pub model_id: String,
    pub metric: String,
    pub retrievers: Vec<RetrieverId>,
    pub n_samples: usize,
    pub friedman: FriedmanResult,
    pub comparisons: Vec<PairwiseComparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub families: Vec<StatsFamily>,
    /// Models that could not be tested, with the reason.
    pub skipped: Vec<String>,
}

fn metric_value(scores: &PerOutputScores, metric: &str) -> Option<f64> {
    match metric {
        "bleu4" => Some(scores.bleu4),
        "rouge_l" => Some(scores.rouge_l),
        "meteor" => Some(scores.meteor),
        "bertscore_f1" => Some(scores.bertscore_f1),
        "safety" => scores.safety,
        _ => None,
    }
}

/// Build the per-model significance families from per-output scores.
pub fn significance_report(metric_report: &MetricReport) -> Result<StatsReport, CoreError> {
    let mut by_model: BTreeMap<&str, Vec<&CellReport>> = BTreeMap::new();
    for cell in metric_report.cells.values() {
        by_model.entry(cell.model_id.as_str()).or_default().push(cell);
    }

    let mut report = StatsReport { families: Vec::new(), skipped: Vec::new() };
    for (model_id, mut cells) in by_model {
        cells.sort_by_key(|c| c.retriever);
        if cells.len() < 2 {
            report.skipped.push(format!("{model_id}: only one retriever arm"));
            continue;
        }
        let mut common: Vec<&String> = cells[0].per_output.keys().collect();
        for cell in &cells[1..] {
            common.retain(|id| cell.per_output.contains_key(*id));
        }
        if common.len() < 2 {
            report.skipped.push(format!(
                "{model_id}: only {} samples scored across all arms",
                common.len()
            ));
            continue;
        }

        let safety_everywhere = cells
            .iter()
            .all(|c| common.iter().all(|id| c.per_output[*id].safety.is_some()));
        let mut metrics: Vec<&str> = TESTED_METRICS.to_vec();
        if safety_everywhere {
            metrics.push("safety");
        }

        for metric in metrics {
            let values: Vec<Vec<f64>> = common
                .iter()
                .map(|id| {
                    cells
                        .iter()
                        .map(|c| metric_value(&c.per_output[*id], metric).unwrap())
                        .collect()
                })
                .collect();
            let systems = cells.iter().map(|c| c.retriever.as_str().to_string()).collect();
            let samples = PairedSamples::new(systems, values)?;
            let friedman = friedman_test(&samples)?;

            let mut comparisons = Vec::new();
            let mut raw_p = Vec::new();
            for i in 0..cells.len() {
                for j in i + 1..cells.len() {
                    let (a, b) = samples.column_pair(i, j);
                    let w = wilcoxon_signed_rank(&a, &b)?;
                    raw_p.push(w.p_value);
                    comparisons.push(PairwiseComparison {
                        retriever_a: cells[i].retriever,
                        retriever_b: cells[j].retriever,
                        statistic: w.statistic,
                        p_value: w.p_value,
                        p_adjusted: 0.0,
                        log10_p: w.log10_p,
                        zeros_dropped: w.zeros_dropped,
                        method: w.method,
                    });
                }
            }
            let adjusted = bonferroni(&raw_p, raw_p.len())?;
            for (comparison, p_adj) in comparisons.iter_mut().zip(adjusted) {
                comparison.p_adjusted = p_adj;
            }
            report.families.push(StatsFamily {
                model_id: model_id.to_string(),
                metric: metric.to_string(),
                retrievers: cells.iter().map(|c| c.retriever).collect(),
                n_samples: common.len(),
                friedman,
                comparisons,
            });
        }
    }
    Ok(report)
}
