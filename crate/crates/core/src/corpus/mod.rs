//! Knowledge-base corpus: record types, ingestion, chunking, and crawling.

mod chunker;
mod fetch;
mod loader;

pub use chunker::{chunk_document, chunk_documents, ChunkPolicy};
pub use fetch::{fetch_documents, CrawlSource, CrawlSpec, FetchOutcome, ListingItem, ListingPage};
pub use loader::{
    corpus_stats, load_documents, load_hs_dataset, read_manifest_csv, save_documents_jsonl,
    save_hs_dataset, write_manifest_csv, write_rejects_jsonl, CorpusLoad, CorpusStats, HsLoad,
    LoadOptions, SourceStats,
};

use serde::{Deserialize, Serialize};

use crate::error::CoreError;

/// Protected groups targeted by the hate speech in scope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, Hash)]
#[serde(rename_all = "UPPERCASE")]
pub enum TargetGroup {
    Women,
    Poc,
    Disabled,
    Migrants,
    Muslims,
    Jews,
    Lgbt,
    Other,
}

impl TargetGroup {
    pub const ALL: [TargetGroup; 8] = [
        TargetGroup::Women,
        TargetGroup::Poc,
        TargetGroup::Disabled,
        TargetGroup::Migrants,
        TargetGroup::Muslims,
        TargetGroup::Jews,
        TargetGroup::Lgbt,
        TargetGroup::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TargetGroup::Women => "WOMEN",
            TargetGroup::Poc => "POC",
            TargetGroup::Disabled => "DISABLED",
            TargetGroup::Migrants => "MIGRANTS",
            TargetGroup::Muslims => "MUSLIMS",
            TargetGroup::Jews => "JEWS",
            TargetGroup::Lgbt => "LGBT",
            TargetGroup::Other => "OTHER",
        }
    }

    /// Strict parse: the label must name one of the eight groups.
    /// Case-insensitive; non-alphanumeric characters are ignored, so
    /// "LGBT+" and "lgbt" both parse.
    pub fn from_label(label: &str) -> Result<TargetGroup, CoreError> {
        match Self::from_label_lenient(label) {
            (group, true) => Ok(group),
            (_, false) => {
                Err(CoreError::validation(format!("unknown target group label {label:?}")))
            }
        }
    }

    /// Lenient parse for annotation-style inputs: unknown labels map to
    /// [`TargetGroup::Other`], with the second element reporting whether the
    /// label was recognized.
    pub fn from_label_lenient(label: &str) -> (TargetGroup, bool) {
        let canon: String =
            label.chars().filter(|c| c.is_alphanumeric()).collect::<String>().to_uppercase();
        let group = match canon.as_str() {
            "WOMEN" => TargetGroup::Women,
            "POC" => TargetGroup::Poc,
            "DISABLED" => TargetGroup::Disabled,
            "MIGRANTS" => TargetGroup::Migrants,
            "MUSLIMS" => TargetGroup::Muslims,
            "JEWS" => TargetGroup::Jews,
            "LGBT" => TargetGroup::Lgbt,
            "OTHER" => TargetGroup::Other,
            _ => return (TargetGroup::Other, false),
        };
        (group, true)
    }
}

impl std::fmt::Display for TargetGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Everything about a knowledge-base document except its text. This is the
/// row shape of the corpus manifest CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentMeta {
    pub id: String,
    pub fname: String,
    pub target: TargetGroup,
    #[serde(rename = "type")]
    pub doc_type: String,
    pub year: i32,
    pub url: String,
    pub source: String,
}

impl DocumentMeta {
    /// Field-level validation; `year_range` is inclusive.
    pub fn validate(&self, year_range: (i32, i32)) -> Result<(), CoreError> {
        if self.id.trim().is_empty() {
            return Err(CoreError::validation("document id is empty"));
        }
        if self.fname.trim().is_empty() {
            return Err(CoreError::validation(format!("document {}: fname is empty", self.id)));
        }
        if self.url.trim().is_empty() {
            return Err(CoreError::validation(format!("document {}: url is empty", self.id)));
        }
        let (lo, hi) = year_range;
        if self.year < lo || self.year > hi {
            return Err(CoreError::validation(format!(
                "document {}: year {} outside [{lo}, {hi}]",
                self.id, self.year
            )));
        }
        Ok(())
    }
}

/// A knowledge-base document. Serializes to the flat record
/// `{"id", "fname", "target", "type", "year", "url", "source", "text"}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    #[serde(flatten)]
    pub meta: DocumentMeta,
    pub text: String,
}

/// A retrieval unit produced by the chunker.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub chunk_id: String,
    pub doc_id: String,
    /// Position of this chunk within its document, contiguous from zero.
    pub ordinal: usize,
    pub text: String,
    /// Token count under the shared tokenizer.
    pub token_count: usize,
}

/// One hate-speech input, optionally paired with a gold counter-speech.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HateSpeechInstance {
    pub hs_id: String,
    pub text: String,
    pub target: TargetGroup,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_cs: Option<String>,
}

/// A record that failed validation during ingestion, with enough context to
/// find it again.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectRecord {
    /// Where the record came from, e.g. `path/to/file.jsonl:17`.
    pub location: String,
    pub reason: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_labels_round_trip() {
        for g in TargetGroup::ALL {
            assert_eq!(TargetGroup::from_label(g.as_str()).unwrap(), g);
        }
        assert_eq!(TargetGroup::from_label("lgbt+").unwrap(), TargetGroup::Lgbt);
        assert!(TargetGroup::from_label("ROBOTS").is_err());
        assert_eq!(TargetGroup::from_label_lenient("ROBOTS"), (TargetGroup::Other, false));
    }

    #[test]
    fn target_serializes_uppercase() {
        assert_eq!(serde_json::to_string(&TargetGroup::Migrants).unwrap(), "\"MIGRANTS\"");
        let g: TargetGroup = serde_json::from_str("\"JEWS\"").unwrap();
        assert_eq!(g, TargetGroup::Jews);
    }

    #[test]
    fn document_serializes_flat() {
        let doc = Document {
            meta: DocumentMeta {
                id: "d1".into(),
                fname: "d1.json".into(),
                target: TargetGroup::Women,
                doc_type: "REPORT".into(),
                year: 2019,
                url: "https://example.org/d1".into(),
                source: "UN".into(),
            },
            text: "body".into(),
        };
        let v = serde_json::to_value(&doc).unwrap();
        assert_eq!(v["id"], "d1");
        assert_eq!(v["type"], "REPORT");
        assert_eq!(v["text"], "body");
        assert!(v.get("meta").is_none());
    }

    #[test]
    fn meta_validation_checks_year_range() {
        let mut meta = DocumentMeta {
            id: "d1".into(),
            fname: "f".into(),
            target: TargetGroup::Other,
            doc_type: "REPORT".into(),
            year: 1999,
            url: "u".into(),
            source: "UN".into(),
        };
        assert!(meta.validate((2000, 2025)).is_err());
        meta.year = 2000;
        assert!(meta.validate((2000, 2025)).is_ok());
    }
}
