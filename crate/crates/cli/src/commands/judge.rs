//! `csrag judge`: pairwise comparison of two systems by an LLM judge.

use std::fs;

use clap::Args;
use csrag_core::judge::{
    build_pairs, judge_pair, system_label, tally, tally_csv, write_verdicts_jsonl, JudgeTemplate,
    SwapPolicy,
};
use csrag_core::pipeline::{load_counter_speech_jsonl, CounterSpeech};
use csrag_core::providers::{ChatProvider, OpenAiCompatClient, StubChat};

use crate::commands::{load_hs, require_file, write_atomic};
use crate::config::{Config, Layout};
use crate::CliError;

#[derive(Debug, Args)]
pub struct JudgeArgs {
    /// First system, written model@retriever (as in the run outputs).
    #[arg(long)]
    pub system_a: String,

    /// Second system, written model@retriever.
    #[arg(long)]
    pub system_b: String,

    /// Judge prompt: rag_vs_norag or method_comparison.
    #[arg(long, default_value = "rag_vs_norag")]
    pub template: String,

    /// Presentation-order handling: both (judge each pair in both orders)
    /// or none.
    #[arg(long, default_value = "both")]
    pub swap: String,

    /// Judge model id (default: providers.judge.model_id; with --stub, the
    /// stub judge).
    #[arg(long)]
    pub judge_model: Option<String>,
}

pub fn run(config: &Config, layout: &Layout, stub: bool, args: &JudgeArgs) -> Result<u8, CliError> {
    let template = JudgeTemplate::parse(&args.template)?;
    let swap = SwapPolicy::parse(&args.swap)?;

    let cs_path = layout.cs_file();
    require_file(&cs_path, "run `csrag run` first")?;
    let outputs = load_counter_speech_jsonl(&cs_path)?;
    let hs = load_hs(config)?;

    let set_a = system_outputs(&outputs, &args.system_a)?;
    let set_b = system_outputs(&outputs, &args.system_b)?;
    let pairs = build_pairs(&hs, &set_a, &set_b, template, swap)?;

    let (chat, judge_model): (Box<dyn ChatProvider>, String) = if stub {
        let model = args.judge_model.clone().unwrap_or_else(|| "stub-judge".into());
        (Box::new(StubChat::new(config.run.seed)), model)
    } else {
        let section = config.providers.judge.as_ref().ok_or_else(|| {
            CliError::config("providers.judge is not configured; set it or pass --stub")
        })?;
        let model = match &args.judge_model {
            Some(model) => model.clone(),
            None => section.require_model("judge")?.to_string(),
        };
        let connection = if section.has_connection() {
            section.connection("judge")?
        } else {
            let generation = config.providers.generation.as_ref().ok_or_else(|| {
                CliError::config(
                    "providers.judge has no connection fields and providers.generation is not configured",
                )
            })?;
            generation.connection("generation")?
        };
        (Box::new(OpenAiCompatClient::new(connection)?), model)
    };

    let verdicts: Vec<_> =
        pairs.iter().map(|pair| judge_pair(chat.as_ref(), &judge_model, pair)).collect();
    let table = tally(&pairs, &verdicts)?;

    fs::create_dir_all(layout.judge_dir()).map_err(|e| {
        CliError::failure(format!("cannot create {}: {e}", layout.judge_dir().display()))
    })?;
    let slug = format!("{}_vs_{}", file_safe(&args.system_a), file_safe(&args.system_b));
    let verdicts_path = layout.judge_dir().join(format!("{slug}.verdicts.jsonl"));
    let tally_path = layout.judge_dir().join(format!("{slug}.tally.csv"));
    write_verdicts_jsonl(&verdicts_path, &verdicts)?;
    write_atomic(&tally_path, &tally_csv(&table)?)?;

    for (key, row) in &table.rows {
        let counts = &row.overall;
        println!(
            "{key}: {} pairs, {} wins for the first system, {} ties",
            counts.total, counts.wins_a, counts.ties
        );
    }
    println!(
        "judged {} pairs ({} judge failures, {} unreadable replies) -> {}",
        pairs.len(),
        table.failed,
        table.parse_failures,
        tally_path.display()
    );
    Ok(if table.failed > 0 { 1 } else { 0 })
}

fn system_outputs(outputs: &[CounterSpeech], label: &str) -> Result<Vec<CounterSpeech>, CliError> {
    let set: Vec<CounterSpeech> =
        outputs.iter().filter(|cs| system_label(cs) == label).cloned().collect();
    if set.is_empty() {
        let mut labels: Vec<String> = outputs.iter().map(system_label).collect();
        labels.sort();
        labels.dedup();
        return Err(CliError::config(format!(
            "no outputs for system {label:?}; available systems: {}",
            labels.join(", ")
        )));
    }
    Ok(set)
}

/// A system label as a filename fragment.
fn file_safe(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '.' | '_') { c } else { '-' })
        .collect()
}
