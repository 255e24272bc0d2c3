//! LLM provider abstractions: chat completion, embeddings, and content
//! moderation, plus an OpenAI-compatible HTTP client, deterministic offline
//! stubs, and a record/replay layer for tests and audits.

mod http;
mod replay;
mod stub;

pub use http::OpenAiCompatClient;
pub use replay::{ReplayLog, ReplayProvider, RecordingChat, RecordingEmbedding, RecordingModeration};
pub use stub::{make_stub_providers, StubChat, StubEmbedding, StubModeration, StubProviders, STUB_EMBED_DIM};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::CoreError;

/// Generation defaults used for every summarization and generation call.
pub const DEFAULT_MAX_NEW_TOKENS: u32 = 150;
pub const DEFAULT_TEMPERATURE: f64 = 0.5;

/// A single-turn chat completion request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model_id: String,
    pub prompt: String,
    pub max_new_tokens: u32,
    pub temperature: f64,
}

impl ChatRequest {
    /// Request with the pipeline-wide generation defaults.
    pub fn new(model_id: impl Into<String>, prompt: impl Into<String>) -> Self {
        ChatRequest {
            model_id: model_id.into(),
            prompt: prompt.into(),
            max_new_tokens: DEFAULT_MAX_NEW_TOKENS,
            temperature: DEFAULT_TEMPERATURE,
        }
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        if self.model_id.trim().is_empty() {
            return Err(CoreError::validation("chat request: empty model id"));
        }
        if self.prompt.trim().is_empty() {
            return Err(CoreError::validation("chat request: empty prompt"));
        }
        if self.max_new_tokens == 0 {
            return Err(CoreError::validation("chat request: max_new_tokens must be positive"));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(CoreError::validation(format!(
                "chat request: bad temperature {}",
                self.temperature
            )));
        }
        Ok(())
    }
}

/// Per-category moderation scores in [0, 1].
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ModerationScores {
    pub scores: BTreeMap<String, f64>,
}

impl ModerationScores {
    /// Highest category score; 0 when no categories were returned.
    pub fn max_score(&self) -> f64 {
        self.scores.values().fold(0.0_f64, |acc, &v| acc.max(v))
    }
}

pub trait ChatProvider: Send + Sync {
    fn chat(&self, request: &ChatRequest) -> Result<String, CoreError>;
}

pub trait EmbeddingProvider: Send + Sync {
    /// Identifier of the embedding model; dense indexes refuse queries from a
    /// different model.
    fn model_id(&self) -> &str;

    /// Embed each text. Must return one vector per input, all of the same
    /// dimension. `texts` must be non-empty.
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, CoreError>;
}

pub trait ModerationProvider: Send + Sync {
    fn moderate(&self, text: &str) -> Result<ModerationScores, CoreError>;
}

/// Connection settings for a remote provider. The API key is resolved from
/// the named environment variable at call time and never stored, logged, or
/// serialized back out.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub base_url: String,
    pub api_key_env: String,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_requests_per_minute")]
    pub requests_per_minute: u32,
    #[serde(default = "default_retry_backoff_ms")]
    pub retry_backoff_ms: u64,
}

fn default_timeout_secs() -> u64 {
    60
}
fn default_max_retries() -> u32 {
    3
}
fn default_requests_per_minute() -> u32 {
    60
}
fn default_retry_backoff_ms() -> u64 {
    500
}

impl ProviderConfig {
    pub fn validate(&self) -> Result<(), CoreError> {
        if self.base_url.trim().is_empty() {
            return Err(CoreError::config("provider: empty base_url"));
        }
        if self.api_key_env.trim().is_empty() {
            return Err(CoreError::config("provider: empty api_key_env"));
        }
        if self.timeout_secs == 0 {
            return Err(CoreError::config("provider: timeout_secs must be positive"));
        }
        if self.requests_per_minute == 0 {
            return Err(CoreError::config("provider: requests_per_minute must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chat_request_defaults_match_pipeline_settings() {
        let r = ChatRequest::new("m", "p");
        assert_eq!(r.max_new_tokens, 150);
        assert_eq!(r.temperature, 0.5);
        assert!(r.validate().is_ok());
    }

    #[test]
    fn chat_request_validation() {
        assert!(ChatRequest::new("", "p").validate().is_err());
        assert!(ChatRequest::new("m", "  ").validate().is_err());
        let mut r = ChatRequest::new("m", "p");
        r.max_new_tokens = 0;
        assert!(r.validate().is_err());
        r = ChatRequest::new("m", "p");
        r.temperature = -1.0;
        assert!(r.validate().is_err());
    }

    #[test]
    fn moderation_max_score() {
        let mut s = ModerationScores::default();
        assert_eq!(s.max_score(), 0.0);
        s.scores.insert("hate".into(), 0.9);
        s.scores.insert("violence".into(), 0.2);
        assert_eq!(s.max_score(), 0.9);
    }

    #[test]
    fn provider_config_validation_and_defaults() {
        let cfg: ProviderConfig = serde_json::from_str(
            r#"{"base_url": "http://localhost", "api_key_env": "KEY"}"#,
        )
        .unwrap();
        assert_eq!(cfg.timeout_secs, 60);
        assert_eq!(cfg.max_retries, 3);
        assert_eq!(cfg.requests_per_minute, 60);
        assert!(cfg.validate().is_ok());
        let bad = ProviderConfig { base_url: "".into(), ..cfg };
        assert!(bad.validate().is_err());
    }
}
