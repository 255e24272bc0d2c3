//! Loading, validating, and persisting corpus records.

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use crate::corpus::{Document, DocumentMeta, HateSpeechInstance, RejectRecord, TargetGroup};
use crate::error::CoreError;
use crate::text;

#[derive(Debug, Clone, Copy)]
pub struct LoadOptions {
    /// Inclusive publication-year bounds.
    pub year_range: (i32, i32),
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions { year_range: (2000, 2025) }
    }
}

/// Result of loading a corpus: valid documents sorted by id, plus every
/// record that was dropped and why. Bad records never abort the load.
#[derive(Debug)]
pub struct CorpusLoad {
    pub documents: Vec<Document>,
    pub rejects: Vec<RejectRecord>,
}

/// Load knowledge-base records from `path`, which may be a single `.json` /
/// `.jsonl` file or a directory tree of them. `.jsonl` files hold one record
/// per line; `.json` files hold a single record or an array of records.
pub fn load_documents(path: &Path, options: &LoadOptions) -> Result<CorpusLoad, CoreError> {
    let mut files = Vec::new();
    collect_corpus_files(path, &mut files)?;
    files.sort();

    let mut documents: Vec<Document> = Vec::new();
    let mut rejects = Vec::new();
    let mut seen_ids: BTreeSet<String> = BTreeSet::new();

    for file in &files {
        for (location, parsed) in parse_records(file)? {
            match parsed {
                Err(reason) => rejects.push(RejectRecord { location, reason }),
                Ok(mut doc) => {
                    doc.text = text::normalize_text(&doc.text);
                    if let Err(e) = doc.meta.validate(options.year_range) {
                        rejects.push(RejectRecord { location, reason: e.to_string() });
                    } else if doc.text.trim().is_empty() {
                        rejects.push(RejectRecord {
                            location,
                            reason: format!("document {}: text is empty", doc.meta.id),
                        });
                    } else if !seen_ids.insert(doc.meta.id.clone()) {
                        rejects.push(RejectRecord {
                            location,
                            reason: format!("duplicate document id {}", doc.meta.id),
                        });
                    } else {
                        documents.push(doc);
                    }
                }
            }
        }
    }
    documents.sort_by(|a, b| a.meta.id.cmp(&b.meta.id));
    Ok(CorpusLoad { documents, rejects })
}

fn collect_corpus_files(path: &Path, out: &mut Vec<PathBuf>) -> Result<(), CoreError> {
    let meta = fs::metadata(path).map_err(|e| CoreError::io(path, e))?;
    if meta.is_file() {
        out.push(path.to_path_buf());
        return Ok(());
    }
    for entry in fs::read_dir(path).map_err(|e| CoreError::io(path, e))? {
        let entry = entry.map_err(|e| CoreError::io(path, e))?;
        let p = entry.path();
        if p.is_dir() {
            collect_corpus_files(&p, out)?;
        } else if matches!(p.extension().and_then(|e| e.to_str()), Some("json") | Some("jsonl")) {
            out.push(p);
        }
    }
    Ok(())
}

type ParsedRecord = (String, Result<Document, String>);

fn parse_records(file: &Path) -> Result<Vec<ParsedRecord>, CoreError> {
    let is_jsonl = file.extension().and_then(|e| e.to_str()) == Some("jsonl");
    let mut out = Vec::new();
    if is_jsonl {
        let reader = BufReader::new(fs::File::open(file).map_err(|e| CoreError::io(file, e))?);
        for (lineno, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| CoreError::io(file, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let location = format!("{}:{}", file.display(), lineno + 1);
            out.push((location, serde_json::from_str(&line).map_err(|e| e.to_string())));
        }
    } else {
        let raw = fs::read_to_string(file).map_err(|e| CoreError::io(file, e))?;
        let location = file.display().to_string();
        match serde_json::from_str::<serde_json::Value>(&raw) {
            Err(e) => out.push((location, Err(e.to_string()))),
            Ok(serde_json::Value::Array(items)) => {
                for (i, item) in items.into_iter().enumerate() {
                    out.push((
                        format!("{location}[{i}]"),
                        serde_json::from_value(item).map_err(|e| e.to_string()),
                    ));
                }
            }
            Ok(value) => {
                out.push((location, serde_json::from_value(value).map_err(|e| e.to_string())))
            }
        }
    }
    Ok(out)
}

/// Write documents as JSON Lines, sorted by id, one flat record per line.
/// Loading the result back yields the same documents.
pub fn save_documents_jsonl(documents: &[Document], path: &Path) -> Result<(), CoreError> {
    let mut sorted: Vec<&Document> = documents.iter().collect();
    sorted.sort_by(|a, b| a.meta.id.cmp(&b.meta.id));
    let mut out = String::new();
    for doc in sorted {
        out.push_str(
            &serde_json::to_string(doc).map_err(|e| CoreError::json("document record", e))?,
        );
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| CoreError::io(path, e))
}

/// Write the corpus manifest CSV: `id,fname,target,type,year,url,source`,
/// sorted by (target, id).
pub fn write_manifest_csv(metas: &[DocumentMeta], path: &Path) -> Result<(), CoreError> {
    let mut sorted: Vec<&DocumentMeta> = metas.iter().collect();
    sorted.sort_by(|a, b| (a.target, &a.id).cmp(&(b.target, &b.id)));
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| CoreError::csv(path.display().to_string(), e))?;
    for meta in sorted {
        writer.serialize(meta).map_err(|e| CoreError::csv(path.display().to_string(), e))?;
    }
    writer.flush().map_err(|e| CoreError::io(path, e))
}

pub fn read_manifest_csv(path: &Path) -> Result<Vec<DocumentMeta>, CoreError> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CoreError::csv(path.display().to_string(), e))?;
    let mut out = Vec::new();
    for row in reader.deserialize() {
        out.push(row.map_err(|e| CoreError::csv(path.display().to_string(), e))?);
    }
    Ok(out)
}

/// Result of loading the hate-speech dataset.
#[derive(Debug)]
pub struct HsLoad {
    pub instances: Vec<HateSpeechInstance>,
    /// Rows whose target label was not one of the eight groups; they load as
    /// OTHER rather than being dropped.
    pub unknown_target_count: usize,
    pub rejects: Vec<RejectRecord>,
}

#[derive(Debug, serde::Deserialize)]
struct HsRow {
    hs_id: String,
    text: String,
    target: String,
    #[serde(default)]
    reference_cs: Option<String>,
}

/// Load the hate-speech CSV (`hs_id,text,target,reference_cs`). Unlike the
/// knowledge base, target labels here are lenient: anything unrecognized
/// becomes OTHER and is counted, since annotation exports are messy in
/// practice. Empty ids or texts and duplicate ids are rejected.
pub fn load_hs_dataset(path: &Path) -> Result<HsLoad, CoreError> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CoreError::csv(path.display().to_string(), e))?;
    let mut instances = Vec::new();
    let mut rejects = Vec::new();
    let mut unknown_target_count = 0usize;
    let mut seen: BTreeSet<String> = BTreeSet::new();

    for (i, row) in reader.deserialize::<HsRow>().enumerate() {
        let location = format!("{}:{}", path.display(), i + 2);
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                rejects.push(RejectRecord { location, reason: e.to_string() });
                continue;
            }
        };
        if row.hs_id.trim().is_empty() {
            rejects.push(RejectRecord { location, reason: "hs_id is empty".into() });
            continue;
        }
        if row.text.trim().is_empty() {
            rejects.push(RejectRecord {
                location,
                reason: format!("hs {}: text is empty", row.hs_id),
            });
            continue;
        }
        if !seen.insert(row.hs_id.clone()) {
            rejects.push(RejectRecord {
                location,
                reason: format!("duplicate hs_id {}", row.hs_id),
            });
            continue;
        }
        let (target, known) = TargetGroup::from_label_lenient(&row.target);
        if !known {
            log::warn!("hs {}: unknown target label {:?}, using OTHER", row.hs_id, row.target);
            unknown_target_count += 1;
        }
        instances.push(HateSpeechInstance {
            hs_id: row.hs_id,
            text: text::normalize_text(&row.text),
            target,
            reference_cs: row.reference_cs.filter(|s| !s.trim().is_empty()),
        });
    }
    Ok(HsLoad { instances, unknown_target_count, rejects })
}

/// Save hate-speech instances back to CSV in `hs_id,text,target,reference_cs`
/// order.
pub fn save_hs_dataset(instances: &[HateSpeechInstance], path: &Path) -> Result<(), CoreError> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| CoreError::csv(path.display().to_string(), e))?;
    writer
        .write_record(["hs_id", "text", "target", "reference_cs"])
        .map_err(|e| CoreError::csv(path.display().to_string(), e))?;
    for hs in instances {
        writer
            .write_record([
                hs.hs_id.as_str(),
                hs.text.as_str(),
                hs.target.as_str(),
                hs.reference_cs.as_deref().unwrap_or(""),
            ])
            .map_err(|e| CoreError::csv(path.display().to_string(), e))?;
    }
    writer.flush().map_err(|e| CoreError::io(path, e))
}

/// Per-source word statistics.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SourceStats {
    pub documents: usize,
    pub total_words: usize,
    pub mean_words: f64,
}

/// Corpus-level summary used by the ingest command.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CorpusStats {
    pub documents: usize,
    pub total_words: usize,
    pub mean_words: f64,
    pub by_source: std::collections::BTreeMap<String, SourceStats>,
    pub by_target: std::collections::BTreeMap<TargetGroup, usize>,
}

pub fn corpus_stats(documents: &[Document]) -> CorpusStats {
    let mut by_source: std::collections::BTreeMap<String, SourceStats> = Default::default();
    let mut by_target: std::collections::BTreeMap<TargetGroup, usize> = Default::default();
    let mut total_words = 0usize;
    for doc in documents {
        let words = text::count_tokens(&doc.text);
        total_words += words;
        let s = by_source.entry(doc.meta.source.clone()).or_insert(SourceStats {
            documents: 0,
            total_words: 0,
            mean_words: 0.0,
        });
        s.documents += 1;
        s.total_words += words;
        *by_target.entry(doc.meta.target).or_insert(0) += 1;
    }
    for s in by_source.values_mut() {
        s.mean_words = s.total_words as f64 / s.documents as f64;
    }
    CorpusStats {
        documents: documents.len(),
        total_words,
        mean_words: if documents.is_empty() {
            0.0
        } else {
            total_words as f64 / documents.len() as f64
        },
        by_source,
        by_target,
    }
}

/// Append-style helper used by the ingest command to persist rejects for
/// later inspection.
pub fn write_rejects_jsonl(rejects: &[RejectRecord], path: &Path) -> Result<(), CoreError> {
    let mut f = fs::File::create(path).map_err(|e| CoreError::io(path, e))?;
    for r in rejects {
        let line = serde_json::to_string(r).map_err(|e| CoreError::json("reject record", e))?;
        writeln!(f, "{line}").map_err(|e| CoreError::io(path, e))?;
    }
    Ok(())
}
