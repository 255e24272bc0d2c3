//! Aggregation of the human evaluation study.
//!
//! Annotators rate each counter-speech method on four three-point scales,
//! mark whether the output would be effective, and pick exactly one best
//! output per hate-speech instance. Records arrive as CSV and aggregate to
//! one summary row per method.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::RejectRecord;
use crate::error::CoreError;
use crate::stats::round_half_up;

pub const ANNOTATION_COLUMNS: [&str; 9] = [
    "annotator_id",
    "hs_id",
    "method",
    "relevance",
    "factuality",
    "cogency",
    "correctness",
    "effective",
    "is_best",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub annotator_id: String,
    pub hs_id: String,
    #[serde(rename = "method")]
    pub cs_method: String,
    pub relevance: u8,
    pub factuality: u8,
    pub cogency: u8,
    pub correctness: u8,
    pub effective: bool,
    pub is_best: bool,
}

impl AnnotationRecord {
    pub fn validate(&self) -> Result<(), CoreError> {
        if self.annotator_id.trim().is_empty()
            || self.hs_id.trim().is_empty()
            || self.cs_method.trim().is_empty()
        {
            return Err(CoreError::validation("annotation record with empty id field"));
        }
        for (name, value) in [
            ("relevance", self.relevance),
            ("factuality", self.factuality),
            ("cogency", self.cogency),
            ("correctness", self.correctness),
        ] {
            if !(1..=3).contains(&value) {
                return Err(CoreError::validation(format!(
                    "{name} = {value} outside the 1..=3 scale"
                )));
            }
        }
        Ok(())
    }
}

/// Aggregate row for one counter-speech method. Likert means are rounded
/// half-up to 2 decimals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub n: usize,
    pub relevance: f64,
    pub factuality: f64,
    pub cogency: f64,
    pub correctness: f64,
    pub effective_yes: usize,
    pub best_votes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationReport {
    pub methods: BTreeMap<String, MethodSummary>,
    /// Records that survived validation and entered the aggregates.
    pub total_records: usize,
    pub effective_total: usize,
    pub effective_fraction: f64,
    /// Accepted (annotator, hs) groups; best votes sum to this.
    pub groups: usize,
    pub rejects: Vec<RejectRecord>,
}

/// Aggregate validated records into per-method means and vote counts.
/// Records failing their own validation are rejected individually; an
/// (annotator, hs) group whose best-choice count is not exactly one is
/// rejected whole, so best votes always conserve.
pub fn aggregate_annotations(
    records: &[AnnotationRecord],
) -> Result<AnnotationReport, CoreError> {
    let mut rejects = Vec::new();
    let mut groups: BTreeMap<(&str, &str), Vec<&AnnotationRecord>> = BTreeMap::new();
    for (i, record) in records.iter().enumerate() {
        match record.validate() {
            Ok(()) => groups
                .entry((record.annotator_id.as_str(), record.hs_id.as_str()))
                .or_default()
                .push(record),
            Err(e) => rejects.push(RejectRecord {
                location: format!("record {i}"),
                reason: e.to_string(),
            }),
        }
    }

    struct Sums {
        n: usize,
        likert: [u64; 4],
        effective_yes: usize,
        best_votes: usize,
    }
    let mut methods: BTreeMap<String, Sums> = BTreeMap::new();
    let mut total_records = 0;
    let mut effective_total = 0;
    let mut group_count = 0;

    for ((annotator, hs), group) in groups {
        let best = group.iter().filter(|r| r.is_best).count();
        if best != 1 {
            rejects.push(RejectRecord {
                location: format!("annotator {annotator}, hs {hs}"),
                reason: format!("expected exactly 1 best-choice vote, found {best}"),
            });
            continue;
        }
        group_count += 1;
        for record in group {
            total_records += 1;
            effective_total += usize::from(record.effective);
            let sums = methods.entry(record.cs_method.clone()).or_insert(Sums {
                n: 0,
                likert: [0; 4],
                effective_yes: 0,
                best_votes: 0,
            });
            sums.n += 1;
            for (slot, value) in sums.likert.iter_mut().zip([
                record.relevance,
                record.factuality,
                record.cogency,
                record.correctness,
            ]) {
                *slot += u64::from(value);
            }
            sums.effective_yes += usize::from(record.effective);
            sums.best_votes += usize::from(record.is_best);
        }
    }

    if total_records == 0 {
        return Err(CoreError::validation("no valid annotation records"));
    }

    let methods = methods
        .into_iter()
        .map(|(method, sums)| {
            let mean = |total: u64| round_half_up(total as f64 / sums.n as f64, 2);
            let summary = MethodSummary {
                method: method.clone(),
                n: sums.n,
                relevance: mean(sums.likert[0]),
                factuality: mean(sums.likert[1]),
                cogency: mean(sums.likert[2]),
                correctness: mean(sums.likert[3]),
                effective_yes: sums.effective_yes,
                best_votes: sums.best_votes,
            };
            (method, summary)
        })
        .collect();

    Ok(AnnotationReport {
        methods,
        total_records,
        effective_total,
        effective_fraction: effective_total as f64 / total_records as f64,
        groups: group_count,
        rejects,
    })
}

/// Render the per-method table as CSV, methods sorted by name.
pub fn annotation_table_csv(report: &AnnotationReport) -> String {
    let mut out = String::from(
        "method,n,relevance,factuality,cogency,correctness,effective_yes,best_votes\n",
    );
    for m in report.methods.values() {
        out.push_str(&format!(
            "{},{},{:.2},{:.2},{:.2},{:.2},{},{}\n",
            m.method, m.n, m.relevance, m.factuality, m.cogency, m.correctness,
            m.effective_yes, m.best_votes
        ));
    }
    out
}

/// Read annotation records from CSV with the fixed nine-column header.
pub fn read_annotations_csv(path: &Path) -> Result<Vec<AnnotationRecord>, CoreError> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CoreError::csv(path.display().to_string(), e))?;
    let headers =
        reader.headers().map_err(|e| CoreError::csv(path.display().to_string(), e))?;
    if headers != &csv::StringRecord::from(ANNOTATION_COLUMNS.to_vec()) {
        return Err(CoreError::validation(format!(
            "unexpected annotation CSV header: {:?}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let location = format!("{}:{}", path.display(), i + 2);
        let row = row.map_err(|e| CoreError::csv(&location, e))?;
        let field = |idx: usize| row.get(idx).unwrap_or("").trim();
        let likert = |idx: usize| -> Result<u8, CoreError> {
            field(idx).parse().map_err(|_| {
                CoreError::validation(format!(
                    "{location}: {} must be an integer, got {:?}",
                    ANNOTATION_COLUMNS[idx],
                    field(idx)
                ))
            })
        };
        out.push(AnnotationRecord {
            annotator_id: field(0).to_string(),
            hs_id: field(1).to_string(),
            cs_method: field(2).to_string(),
            relevance: likert(3)?,
            factuality: likert(4)?,
            cogency: likert(5)?,
            correctness: likert(6)?,
            effective: parse_bool(&location, "effective", field(7))?,
            is_best: parse_bool(&location, "is_best", field(8))?,
        });
    }
    Ok(out)
}

fn parse_bool(location: &str, column: &str, value: &str) -> Result<bool, CoreError> {
    match value.to_lowercase().as_str() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(CoreError::validation(format!(
            "{location}: {column} must be boolean, got {other:?}"
        ))),
    }
}
