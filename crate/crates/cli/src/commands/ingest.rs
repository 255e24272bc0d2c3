//! `csrag ingest`: build the knowledge base from a document dump or a
//! crawl, then chunk it for retrieval.

use std::fs;

use csrag_core::corpus::{
    chunk_documents, fetch_documents, load_documents, save_documents_jsonl, write_manifest_csv,
    write_rejects_jsonl, LoadOptions,
};

use crate::commands::write_jsonl;
use crate::config::{Config, Layout};
use crate::CliError;

pub fn run(config: &Config, layout: &Layout) -> Result<u8, CliError> {
    fs::create_dir_all(layout.kb_dir()).map_err(|e| {
        CliError::failure(format!("cannot create {}: {e}", layout.kb_dir().display()))
    })?;

    let mut crawl_failures = 0usize;
    let input = match (&config.crawl, &config.corpus.input) {
        (Some(_), Some(_)) => {
            return Err(CliError::config(
                "corpus.input and [crawl] are both set; configure one document source",
            ));
        }
        (None, None) => {
            return Err(CliError::config(
                "no document source: set corpus.input or add a [crawl] section",
            ));
        }
        (Some(spec), None) => {
            let raw_dir = layout.raw_dir();
            let outcome = fetch_documents(spec, &raw_dir)?;
            println!(
                "crawl: {} new, {} already present, {} failures",
                outcome.new_documents,
                outcome.skipped_duplicates,
                outcome.errors.len()
            );
            if outcome.errors.is_empty() {
                let _ = fs::remove_file(layout.crawl_rejects_file());
            } else {
                write_rejects_jsonl(&outcome.errors, &layout.crawl_rejects_file())?;
                println!(
                    "crawl failures are recorded in {}",
                    layout.crawl_rejects_file().display()
                );
                crawl_failures = outcome.errors.len();
            }
            raw_dir
        }
        (None, Some(path)) => {
            if !path.exists() {
                return Err(CliError::config(format!(
                    "corpus.input {} does not exist",
                    path.display()
                )));
            }
            path.clone()
        }
    };

    let options = LoadOptions { year_range: config.corpus.year_range };
    let load = load_documents(&input, &options)?;
    save_documents_jsonl(&load.documents, &layout.documents_file())?;
    let metas: Vec<_> = load.documents.iter().map(|d| d.meta.clone()).collect();
    write_manifest_csv(&metas, &layout.kb_manifest_file())?;
    if load.rejects.is_empty() {
        let _ = fs::remove_file(layout.kb_rejects_file());
    } else {
        write_rejects_jsonl(&load.rejects, &layout.kb_rejects_file())?;
    }

    let chunks = chunk_documents(&load.documents, &config.corpus.chunking)?;
    write_jsonl(&layout.chunks_file(), &chunks)?;

    println!(
        "knowledge base: {} documents, {} chunks, {} records rejected -> {}",
        load.documents.len(),
        chunks.len(),
        load.rejects.len(),
        layout.kb_dir().display()
    );
    Ok(if crawl_failures > 0 { 1 } else { 0 })
}
