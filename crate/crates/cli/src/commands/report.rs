//! `csrag report`: render a Markdown summary from previously computed
//! artifacts. Nothing is recomputed here; missing optional artifacts simply
//! drop their section.

use std::fs;
use std::path::{Path, PathBuf};

use csrag_core::pipeline::load_run_manifest;
use csrag_core::stats::AnnotationReport;

use crate::commands::{read_to_string, require_file, write_atomic};
use crate::config::{Config, Layout};
use crate::CliError;

pub fn run(_config: &Config, layout: &Layout) -> Result<u8, CliError> {
    let metrics_csv = layout.metrics_csv_file();
    require_file(&metrics_csv, "run `csrag evaluate` first")?;

    let mut md = String::from("# Counter-speech experiment report\n");

    if layout.run_manifest_file().is_file() {
        let manifest = load_run_manifest(&layout.run_manifest_file())?;
        let retrievers: Vec<&str> = manifest.retrievers.iter().map(|r| r.as_str()).collect();
        md.push_str("\n## Run\n\n");
        md.push_str(&format!("- seed: {}\n", manifest.seed));
        md.push_str(&format!("- evidence passages per query (k): {}\n", manifest.k));
        md.push_str(&format!("- retrievers: {}\n", retrievers.join(", ")));
        md.push_str(&format!("- models: {}\n", manifest.models.join(", ")));
        md.push_str(&format!(
            "- cells: {} completed, {} failed\n",
            manifest.completed_cells(),
            manifest.failed_cells()
        ));
    }

    md.push_str("\n## Automatic metrics\n\n");
    md.push_str(&csv_to_markdown(&read_to_string(&metrics_csv)?)?);

    if layout.significance_csv_file().is_file() {
        md.push_str("\n## Significance tests\n\n");
        md.push_str(&csv_to_markdown(&read_to_string(&layout.significance_csv_file())?)?);
    }

    for path in tally_files(&layout.judge_dir())? {
        let name = path
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or_default()
            .trim_end_matches(".tally.csv")
            .replace("_vs_", " vs ");
        md.push_str(&format!("\n## Judge: {name}\n\n"));
        md.push_str(&csv_to_markdown(&read_to_string(&path)?)?);
    }

    if layout.human_csv_file().is_file() {
        md.push_str("\n## Human evaluation\n\n");
        md.push_str(&csv_to_markdown(&read_to_string(&layout.human_csv_file())?)?);
        if layout.human_json_file().is_file() {
            let human: AnnotationReport =
                serde_json::from_str(&read_to_string(&layout.human_json_file())?).map_err(|e| {
                    CliError::failure(format!("{}: {e}", layout.human_json_file().display()))
                })?;
            md.push_str(&format!(
                "\n{} of {} judgments marked the counter-speech effective ({:.1}%).\n",
                human.effective_total,
                human.total_records,
                100.0 * human.effective_fraction
            ));
        }
    }

    write_atomic(&layout.report_file(), &md)?;
    println!("wrote {}", layout.report_file().display());
    Ok(0)
}

/// Tally tables under the judge directory, in file-name order so the report
/// is stable.
fn tally_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let Ok(entries) = fs::read_dir(dir) else {
        return Ok(Vec::new());
    };
    let mut files = Vec::new();
    for entry in entries {
        let entry =
            entry.map_err(|e| CliError::failure(format!("cannot list {}: {e}", dir.display())))?;
        let path = entry.path();
        if path.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with(".tally.csv")) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn csv_to_markdown(raw: &str) -> Result<String, CliError> {
    let mut reader =
        csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(raw.as_bytes());
    let mut rows: Vec<Vec<String>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::failure(format!("bad csv row: {e}")))?;
        rows.push(record.iter().map(|cell| cell.replace('|', "\\|")).collect());
    }
    let Some(header) = rows.first() else {
        return Ok(String::from("(empty table)\n"));
    };
    let mut out = String::new();
    out.push_str(&format!("| {} |\n", header.join(" | ")));
    out.push_str(&format!("|{}|\n", vec!["---"; header.len()].join("|")));
    for row in &rows[1..] {
        out.push_str(&format!("| {} |\n", row.join(" | ")));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_renders_as_a_markdown_table() {
        let md = csv_to_markdown("a,b\n1,x|y\n").unwrap();
        assert_eq!(md, "| a | b |\n|---|---|\n| 1 | x\\|y |\n");
    }

    #[test]
    fn empty_csv_renders_as_a_placeholder() {
        assert_eq!(csv_to_markdown("").unwrap(), "(empty table)\n");
    }
}
