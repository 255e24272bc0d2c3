//! Index persistence. Snapshots are JSON with an explicit header so a loader
//! can refuse anything it does not understand instead of misreading it.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::index::{Bm25Index, Bm25Params, VectorIndex};

pub const SNAPSHOT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub format_version: u32,
    /// Which retrieval arm this snapshot serves: "bm25", "dense_a", "dense_b".
    pub retriever_id: String,
    pub chunk_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<Bm25Params>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
}

/// Either kind of index, as stored on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexKind {
    Bm25(Bm25Index),
    Dense(VectorIndex),
}

impl IndexKind {
    pub fn chunk_count(&self) -> usize {
        match self {
            IndexKind::Bm25(i) => i.len(),
            IndexKind::Dense(i) => i.len(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SnapshotFile {
    header: SnapshotHeader,
    index: IndexKind,
}

pub fn save_snapshot(path: &Path, retriever_id: &str, index: &IndexKind) -> Result<(), CoreError> {
    let header = match index {
        IndexKind::Bm25(i) => SnapshotHeader {
            format_version: SNAPSHOT_FORMAT_VERSION,
            retriever_id: retriever_id.to_string(),
            chunk_count: i.len(),
            params: Some(i.params()),
            model_id: None,
            dim: None,
        },
        IndexKind::Dense(i) => SnapshotHeader {
            format_version: SNAPSHOT_FORMAT_VERSION,
            retriever_id: retriever_id.to_string(),
            chunk_count: i.len(),
            params: None,
            model_id: Some(i.model_id().to_string()),
            dim: Some(i.dim()),
        },
    };
    let file = SnapshotFile { header, index: index.clone() };
    let json = serde_json::to_string(&file).map_err(|e| CoreError::json("index snapshot", e))?;
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, json).map_err(|e| CoreError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CoreError::io(path, e))
}

/// Load a snapshot, returning its header and index. Fails with
/// [`CoreError::Incompatible`] on a version mismatch or on a header that
/// contradicts the payload.
pub fn load_snapshot(path: &Path) -> Result<(SnapshotHeader, IndexKind), CoreError> {
    let raw = fs::read_to_string(path).map_err(|e| CoreError::io(path, e))?;
    // Peek at the header before touching the payload so a future format bump
    // yields the version error, not a deserialization error.
    #[derive(Deserialize)]
    struct HeaderOnly {
        header: SnapshotHeader,
    }
    let head: HeaderOnly = serde_json::from_str(&raw)
        .map_err(|e| CoreError::json(format!("snapshot header of {}", path.display()), e))?;
    if head.header.format_version != SNAPSHOT_FORMAT_VERSION {
        return Err(CoreError::incompatible(format!(
            "snapshot {} has format_version {}, this build reads {}",
            path.display(),
            head.header.format_version,
            SNAPSHOT_FORMAT_VERSION
        )));
    }
    let file: SnapshotFile = serde_json::from_str(&raw)
        .map_err(|e| CoreError::json(format!("snapshot {}", path.display()), e))?;
    if file.header.chunk_count != file.index.chunk_count() {
        return Err(CoreError::incompatible(format!(
            "snapshot {}: header says {} chunks, payload has {}",
            path.display(),
            file.header.chunk_count,
            file.index.chunk_count()
        )));
    }
    if let (IndexKind::Dense(i), Some(m)) = (&file.index, &file.header.model_id) {
        if i.model_id() != m {
            return Err(CoreError::incompatible(format!(
                "snapshot {}: header model {m:?} does not match payload {:?}",
                path.display(),
                i.model_id()
            )));
        }
    }
    Ok((file.header, file.index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Chunk;

    fn chunks() -> Vec<Chunk> {
        ["alpha beta", "beta gamma", "gamma delta"]
            .iter()
            .enumerate()
            .map(|(i, t)| Chunk {
                chunk_id: format!("c{i}"),
                doc_id: format!("d{i}"),
                ordinal: 0,
                text: t.to_string(),
                token_count: 2,
            })
            .collect()
    }

    #[test]
    fn bm25_snapshot_round_trips() {
        let dir = std::env::temp_dir().join(format!("snap-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bm25.json");

        let idx = Bm25Index::build(&chunks(), Bm25Params::default()).unwrap();
        let before = idx.top_k("beta", 3).unwrap();
        save_snapshot(&path, "bm25", &IndexKind::Bm25(idx)).unwrap();

        let (header, loaded) = load_snapshot(&path).unwrap();
        assert_eq!(header.retriever_id, "bm25");
        assert_eq!(header.chunk_count, 3);
        assert_eq!(header.params.unwrap(), Bm25Params::default());
        let IndexKind::Bm25(loaded) = loaded else { panic!("wrong kind") };
        let after = loaded.top_k("beta", 3).unwrap();
        assert_eq!(before, after);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn version_mismatch_is_refused() {
        let dir = std::env::temp_dir().join(format!("snap-ver-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bm25.json");
        let idx = Bm25Index::build(&chunks(), Bm25Params::default()).unwrap();
        save_snapshot(&path, "bm25", &IndexKind::Bm25(idx)).unwrap();

        let mut raw: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        raw["header"]["format_version"] = serde_json::json!(99);
        std::fs::write(&path, serde_json::to_string(&raw).unwrap()).unwrap();

        let err = load_snapshot(&path).unwrap_err();
        assert!(matches!(err, CoreError::Incompatible(_)), "{err}");
        assert!(err.to_string().contains("format_version 99"));
        std::fs::remove_dir_all(&dir).ok();
    }
}
