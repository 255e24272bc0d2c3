//! `csrag evaluate`: score generated counter-speech against the reference
//! counter-speech from the dataset.

use std::collections::BTreeMap;

use csrag_core::metrics::{evaluate_outputs, metric_table_csv, EvalInput};
use csrag_core::pipeline::load_counter_speech_jsonl;

use crate::commands::{
    load_hs, moderation_provider, require_file, scoring_embedder, write_atomic, write_json_pretty,
};
use crate::config::{Config, Layout};
use crate::CliError;

pub fn run(config: &Config, layout: &Layout, stub: bool) -> Result<u8, CliError> {
    let cs_path = layout.cs_file();
    require_file(&cs_path, "run `csrag run` first")?;
    let outputs = load_counter_speech_jsonl(&cs_path)?;
    let hs = load_hs(config)?;

    let references: BTreeMap<String, String> = hs
        .iter()
        .filter_map(|h| h.reference_cs.clone().map(|r| (h.hs_id.clone(), r)))
        .collect();

    let inputs: Vec<EvalInput> = outputs
        .iter()
        .map(|cs| EvalInput {
            hs_id: cs.hs_id.clone(),
            retriever: cs.retriever,
            model_id: cs.model_id.clone(),
            text: cs.text.clone(),
        })
        .collect();

    let embedder = scoring_embedder(config, stub)?;
    let moderation = moderation_provider(config, stub)?;
    let report = evaluate_outputs(
        &inputs,
        &references,
        embedder.as_ref(),
        moderation.as_deref(),
        config.metrics.unwrap_or_default(),
    )?;

    write_json_pretty(&layout.metrics_json_file(), &report)?;
    write_atomic(&layout.metrics_csv_file(), &metric_table_csv(&report))?;

    let scored: usize = report.cells.values().map(|c| c.n_scored).sum();
    println!(
        "scored {} cells ({} outputs, {} with references) -> {}",
        report.cells.len(),
        outputs.len(),
        scored,
        layout.metrics_csv_file().display()
    );
    Ok(0)
}
