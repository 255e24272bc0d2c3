//! Whole-run evaluation: per-output scores, per-cell aggregates, and the
//! summary table.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::index::RetrieverId;
use crate::metrics::{
    bertscore_f1, bleu4, distinct_n, meteor, repetition_rate, rouge_l, safety_score, MetricConfig,
};
use crate::providers::{EmbeddingProvider, ModerationProvider};

/// One generated output to score. `hs_id` keys the reference lookup; the
/// (retriever, model) pair names the grid cell the output belongs to.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalInput {
    pub hs_id: String,
    pub retriever: RetrieverId,
    pub model_id: String,
    pub text: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerOutputScores {
    pub bleu4: f64,
    pub rouge_l: f64,
    pub meteor: f64,
    pub bertscore_f1: f64,
    /// None when no moderation provider was configured or the call failed;
    /// the failure reason is kept alongside.
    pub safety: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub safety_error: Option<String>,
}

/// Aggregates for one (retriever, model) cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellReport {
    pub retriever: RetrieverId,
    pub model_id: String,
    /// Outputs in the cell (all contribute to diversity metrics).
    pub n_outputs: usize,
    /// Outputs with a reference (these contribute to the reference-based
    /// means).
    pub n_scored: usize,
    pub skipped_no_reference: usize,
    pub mean_bleu4: f64,
    pub mean_rouge_l: f64,
    pub mean_meteor: f64,
    pub mean_bertscore_f1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_safety: Option<f64>,
    pub distinct_1: f64,
    pub distinct_2: f64,
    pub repetition_rate: f64,
    /// hs_id -> scores, for significance testing downstream.
    pub per_output: BTreeMap<String, PerOutputScores>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricReport {
    pub config: MetricConfig,
    /// Keyed "retriever|model" so the JSON is stable and human-scannable.
    pub cells: BTreeMap<String, CellReport>,
}

pub fn cell_key(retriever: RetrieverId, model_id: &str) -> String {
    format!("{retriever}|{model_id}")
}

/// Score every output. Reference texts come from `references` (hs_id ->
/// gold counter-speech); outputs without a reference stay in the diversity
/// pool but are excluded from reference-based means. Safety is scored only
/// when a moderation provider is given, and a failed moderation call marks
/// the single output unscored instead of failing the run.
pub fn evaluate_outputs(
    inputs: &[EvalInput],
    references: &BTreeMap<String, String>,
    embedder: &dyn EmbeddingProvider,
    moderation: Option<&dyn ModerationProvider>,
    config: MetricConfig,
) -> Result<MetricReport, CoreError> {
    if inputs.is_empty() {
        return Err(CoreError::validation("evaluate: no outputs given"));
    }

    let mut grouped: BTreeMap<String, Vec<&EvalInput>> = BTreeMap::new();
    for input in inputs {
        grouped.entry(cell_key(input.retriever, &input.model_id)).or_default().push(input);
    }

    let mut cells = BTreeMap::new();
    for (key, outputs) in grouped {
        let mut per_output = BTreeMap::new();
        let mut sums = [0.0f64; 4];
        let mut safety_sum = 0.0;
        let mut safety_n = 0usize;
        let mut skipped = 0usize;

        for out in &outputs {
            let (safety, safety_error) = match moderation {
                None => (None, None),
                Some(m) => match safety_score(&out.text, m) {
                    Ok(s) => (Some(s), None),
                    Err(e) => (None, Some(e.to_string())),
                },
            };
            if let Some(s) = safety {
                safety_sum += s;
                safety_n += 1;
            }
            let Some(reference) = references.get(&out.hs_id) else {
                skipped += 1;
                continue;
            };
            let scores = PerOutputScores {
                bleu4: bleu4(&out.text, &[reference.as_str()], config.bleu_epsilon),
                rouge_l: rouge_l(&out.text, reference, config.rouge_beta),
                meteor: meteor(
                    &out.text,
                    reference,
                    config.meteor_alpha,
                    config.meteor_beta,
                    config.meteor_gamma,
                ),
                bertscore_f1: bertscore_f1(&out.text, reference, embedder)?,
                safety,
                safety_error,
            };
            sums[0] += scores.bleu4;
            sums[1] += scores.rouge_l;
            sums[2] += scores.meteor;
            sums[3] += scores.bertscore_f1;
            per_output.insert(out.hs_id.clone(), scores);
        }

        let pool: Vec<String> = outputs.iter().map(|o| o.text.clone()).collect();
        let n_scored = per_output.len();
        let denom = n_scored.max(1) as f64;
        let (retriever, model_id) = (outputs[0].retriever, outputs[0].model_id.clone());
        cells.insert(
            key,
            CellReport {
                retriever,
                model_id,
                n_outputs: outputs.len(),
                n_scored,
                skipped_no_reference: skipped,
                mean_bleu4: sums[0] / denom,
                mean_rouge_l: sums[1] / denom,
                mean_meteor: sums[2] / denom,
                mean_bertscore_f1: sums[3] / denom,
                mean_safety: (safety_n > 0).then(|| safety_sum / safety_n as f64),
                distinct_1: distinct_n(&pool, 1)?,
                distinct_2: distinct_n(&pool, 2)?,
                repetition_rate: repetition_rate(&pool, config.repetition_max_order)?,
                per_output,
            },
        );
    }
    Ok(MetricReport { config, cells })
}

/// Column order of the exported per-cell table.
pub const METRIC_COLUMNS: [&str; 8] = [
    "BLEU",
    "METEOR",
    "ROUGE-L",
    "BERTScore_F1",
    "Distinct-1",
    "Distinct-2",
    "Repetition Rate",
    "Safety",
];

/// Render the per-cell summary as CSV, rows sorted by (retriever, model).
pub fn metric_table_csv(report: &MetricReport) -> String {
    let mut out = String::from("retriever,model,");
    out.push_str(&METRIC_COLUMNS.join(","));
    out.push('\n');

    let mut cells: Vec<&CellReport> = report.cells.values().collect();
    cells.sort_by(|a, b| (a.retriever, &a.model_id).cmp(&(b.retriever, &b.model_id)));
    for cell in cells {
        let safety = cell.mean_safety.map(|s| format!("{s:.4}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{}\n",
            cell.retriever,
            cell.model_id,
            cell.mean_bleu4,
            cell.mean_meteor,
            cell.mean_rouge_l,
            cell.mean_bertscore_f1,
            cell.distinct_1,
            cell.distinct_2,
            cell.repetition_rate,
            safety,
        ));
    }
    out
}
