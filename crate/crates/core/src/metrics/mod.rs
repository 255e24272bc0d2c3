//! Reference-based and corpus-level metrics for generated counter-speech.
//!
//! Per-output metrics (BLEU-4, ROUGE-L, METEOR, BERTScore-style F1, safety)
//! score one candidate against its reference; corpus-level metrics
//! (Distinct-1/2, repetition rate) pool all outputs of one grid cell. All
//! token-level work uses the shared tokenizer from [`crate::text`].

mod bertscore;
mod bleu;
mod diversity;
mod meteor;
pub mod porter;
mod report;
mod rouge;
mod safety;

pub use bertscore::bertscore_f1;
pub use bleu::bleu4;
pub use diversity::{distinct_n, repetition_rate};
pub use meteor::meteor;
pub use report::{
    cell_key, evaluate_outputs, metric_table_csv, CellReport, EvalInput, MetricReport,
    PerOutputScores, METRIC_COLUMNS,
};
pub use rouge::rouge_l;
pub use safety::safety_score;

use serde::{Deserialize, Serialize};

/// Tunables, all defaulted to the values used throughout the experiments.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MetricConfig {
    /// Smoothing for zero n-gram precisions in BLEU.
    pub bleu_epsilon: f64,
    /// Recall weight in the ROUGE-L F-measure.
    pub rouge_beta: f64,
    /// METEOR precision weight (0.9 weights recall heavily, as usual).
    pub meteor_alpha: f64,
    /// METEOR fragmentation exponent.
    pub meteor_beta: f64,
    /// METEOR fragmentation penalty weight.
    pub meteor_gamma: f64,
    /// Largest n-gram order pooled into the repetition rate.
    pub repetition_max_order: usize,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            bleu_epsilon: 1e-9,
            rouge_beta: 1.2,
            meteor_alpha: 0.9,
            meteor_beta: 3.0,
            meteor_gamma: 0.5,
            repetition_max_order: 4,
        }
    }
}
