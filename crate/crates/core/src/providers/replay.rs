//! Record/replay for provider traffic.
//!
//! Recording wrappers sit in front of a live provider and append every
//! exchange to a JSONL log. A [`ReplayProvider`] loads such a log and serves
//! the recorded responses instead of calling anything, keyed by a digest of
//! the request; repeated identical requests replay in recorded order.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CoreError;
use crate::hashing::sha256_hex;
use crate::providers::{
    ChatProvider, ChatRequest, EmbeddingProvider, ModerationProvider, ModerationScores,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ReplayRecord {
    kind: String,
    request: Value,
    response: Value,
}

fn request_key(kind: &str, request: &Value) -> String {
    // serde_json preserves no map order by default, but these values are
    // built from structs with fixed field order, so serialization is stable.
    sha256_hex(&format!("{kind}:{request}"))
}

/// Shared JSONL sink for the recording wrappers.
pub struct ReplayLog {
    file: Mutex<fs::File>,
}

impl ReplayLog {
    pub fn create(path: &Path) -> Result<Arc<Self>, CoreError> {
        let file = fs::File::create(path).map_err(|e| CoreError::io(path, e))?;
        Ok(Arc::new(ReplayLog { file: Mutex::new(file) }))
    }

    fn append(&self, kind: &str, request: Value, response: Value) -> Result<(), CoreError> {
        let record = ReplayRecord { kind: kind.to_string(), request, response };
        let line = serde_json::to_string(&record)
            .map_err(|e| CoreError::json("replay record", e))?;
        let mut file = self.file.lock().unwrap();
        writeln!(file, "{line}")
            .map_err(|e| CoreError::io("replay log", e))
    }
}

pub struct RecordingChat<P> {
    pub inner: P,
    pub log: Arc<ReplayLog>,
}

impl<P: ChatProvider> ChatProvider for RecordingChat<P> {
    fn chat(&self, request: &ChatRequest) -> Result<String, CoreError> {
        let response = self.inner.chat(request)?;
        self.log.append(
            "chat",
            serde_json::to_value(request).map_err(|e| CoreError::json("chat request", e))?,
            Value::String(response.clone()),
        )?;
        Ok(response)
    }
}

pub struct RecordingEmbedding<P> {
    pub inner: P,
    pub log: Arc<ReplayLog>,
}

impl<P: EmbeddingProvider> EmbeddingProvider for RecordingEmbedding<P> {
    fn model_id(&self) -> &str {
        self.inner.model_id()
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, CoreError> {
        let response = self.inner.embed(texts)?;
        self.log.append(
            "embed",
            serde_json::json!({ "model": self.inner.model_id(), "texts": texts }),
            serde_json::to_value(&response).map_err(|e| CoreError::json("embed response", e))?,
        )?;
        Ok(response)
    }
}

pub struct RecordingModeration<P> {
    pub inner: P,
    pub log: Arc<ReplayLog>,
}

impl<P: ModerationProvider> ModerationProvider for RecordingModeration<P> {
    fn moderate(&self, text: &str) -> Result<ModerationScores, CoreError> {
        let response = self.inner.moderate(text)?;
        self.log.append(
            "moderate",
            Value::String(text.to_string()),
            serde_json::to_value(&response)
                .map_err(|e| CoreError::json("moderation response", e))?,
        )?;
        Ok(response)
    }
}

/// Serves recorded responses. Implements all three provider traits; a request
/// that was never recorded is an error rather than a fallthrough, so replay
/// runs cannot silently go to the network.
pub struct ReplayProvider {
    /// request digest -> FIFO of recorded responses.
    responses: Mutex<BTreeMap<String, Vec<Value>>>,
    embed_model: String,
}

impl ReplayProvider {
    pub fn load(path: &Path) -> Result<Self, CoreError> {
        let raw = fs::read_to_string(path).map_err(|e| CoreError::io(path, e))?;
        let mut responses: BTreeMap<String, Vec<Value>> = BTreeMap::new();
        let mut embed_model = String::new();
        for (i, line) in raw.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: ReplayRecord = serde_json::from_str(line)
                .map_err(|e| CoreError::json(format!("{}:{}", path.display(), i + 1), e))?;
            if record.kind == "embed" {
                if let Some(m) = record.request.get("model").and_then(|v| v.as_str()) {
                    embed_model = m.to_string();
                }
            }
            responses
                .entry(request_key(&record.kind, &record.request))
                .or_default()
                .push(record.response);
        }
        // Stored LIFO-reversed so pop() yields recorded order.
        for fifo in responses.values_mut() {
            fifo.reverse();
        }
        Ok(ReplayProvider { responses: Mutex::new(responses), embed_model })
    }

    fn take(&self, kind: &str, request: &Value) -> Result<Value, CoreError> {
        let key = request_key(kind, request);
        let mut map = self.responses.lock().unwrap();
        match map.get_mut(&key).and_then(Vec::pop) {
            Some(v) => Ok(v),
            None => Err(CoreError::incompatible(format!(
                "replay log has no (remaining) response for this {kind} request"
            ))),
        }
    }
}

impl ChatProvider for ReplayProvider {
    fn chat(&self, request: &ChatRequest) -> Result<String, CoreError> {
        let req = serde_json::to_value(request).map_err(|e| CoreError::json("chat request", e))?;
        let response = self.take("chat", &req)?;
        response
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| CoreError::incompatible("replay: chat response is not a string"))
    }
}

impl EmbeddingProvider for ReplayProvider {
    fn model_id(&self) -> &str {
        &self.embed_model
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, CoreError> {
        let req = serde_json::json!({ "model": self.embed_model, "texts": texts });
        let response = self.take("embed", &req)?;
        serde_json::from_value(response)
            .map_err(|e| CoreError::json("replayed embed response", e))
    }
}

impl ModerationProvider for ReplayProvider {
    fn moderate(&self, text: &str) -> Result<ModerationScores, CoreError> {
        let response = self.take("moderate", &Value::String(text.to_string()))?;
        serde_json::from_value(response)
            .map_err(|e| CoreError::json("replayed moderation response", e))
    }
}
