//! `csrag stats`: significance tests over per-sample metric scores, plus
//! optional aggregation of human annotations.

use std::path::PathBuf;

use clap::Args;
use csrag_core::metrics::MetricReport;
use csrag_core::stats::{
    aggregate_annotations, annotation_table_csv, read_annotations_csv, significance_report,
    PValueMethod, StatsReport,
};

use crate::commands::{read_to_string, require_file, write_atomic, write_json_pretty};
use crate::config::{Config, Layout};
use crate::CliError;

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Human-annotation CSV to aggregate (default: human.annotations from
    /// the config; omit both to skip).
    #[arg(long)]
    pub annotations: Option<PathBuf>,
}

pub fn run(config: &Config, layout: &Layout, args: &StatsArgs) -> Result<u8, CliError> {
    let metrics_path = layout.metrics_json_file();
    require_file(&metrics_path, "run `csrag evaluate` first")?;
    let metric_report: MetricReport = serde_json::from_str(&read_to_string(&metrics_path)?)
        .map_err(|e| CliError::failure(format!("{}: {e}", metrics_path.display())))?;

    let report = significance_report(&metric_report)?;
    write_json_pretty(&layout.significance_json_file(), &report)?;
    write_atomic(&layout.significance_csv_file(), &significance_csv(&report))?;
    for reason in &report.skipped {
        log::warn!("skipped: {reason}");
    }
    println!(
        "{} test families ({} skipped) -> {}",
        report.families.len(),
        report.skipped.len(),
        layout.significance_csv_file().display()
    );

    let annotations = args.annotations.clone().or_else(|| config.human.annotations.clone());
    if let Some(path) = annotations {
        require_file(&path, "point --annotations (or human.annotations) at the annotation CSV")?;
        let records = read_annotations_csv(&path)?;
        let human = aggregate_annotations(&records)?;
        write_json_pretty(&layout.human_json_file(), &human)?;
        write_atomic(&layout.human_csv_file(), &annotation_table_csv(&human))?;
        for reject in &human.rejects {
            log::warn!("{}: {}", reject.location, reject.reason);
        }
        println!(
            "human eval: {} of {} records marked effective ({:.1}%) -> {}",
            human.effective_total,
            human.total_records,
            100.0 * human.effective_fraction,
            layout.human_csv_file().display()
        );
    }
    Ok(0)
}

/// Flat significance table: one row per pairwise comparison, with the
/// family's Friedman result repeated on each of its rows.
fn significance_csv(report: &StatsReport) -> String {
    let mut out = String::from(
        "model,metric,n_samples,friedman_statistic,friedman_df,friedman_p,retriever_a,retriever_b,wilcoxon_statistic,p_value,p_adjusted,method\n",
    );
    for family in &report.families {
        let prefix = format!(
            "{},{},{},{:.4},{},{:.6}",
            family.model_id,
            family.metric,
            family.n_samples,
            family.friedman.statistic,
            family.friedman.df,
            family.friedman.p_value
        );
        if family.comparisons.is_empty() {
            out.push_str(&format!("{prefix},,,,,,\n"));
            continue;
        }
        for comparison in &family.comparisons {
            let method = match comparison.method {
                PValueMethod::Exact => "exact",
                PValueMethod::NormalApprox => "normal_approx",
            };
            out.push_str(&format!(
                "{prefix},{},{},{:.1},{:.6},{:.6},{method}\n",
                comparison.retriever_a.as_str(),
                comparison.retriever_b.as_str(),
                // + 0.0 turns a negative zero into a plain one.
                comparison.statistic + 0.0,
                comparison.p_value,
                comparison.p_adjusted
            ));
        }
    }
    out
}
