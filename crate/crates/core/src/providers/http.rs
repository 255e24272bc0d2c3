//! OpenAI-compatible HTTP client used for chat, embeddings, and moderation.
//!
//! One client struct serves all three traits; construct it with whichever
//! model ids the deployment uses. Requests are throttled to the configured
//! requests-per-minute and retried with exponential backoff on 429, 5xx, and
//! transport errors. Auth failures are terminal immediately.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use crate::error::{CoreError, ProviderErrorKind};
use crate::providers::{
    ChatProvider, ChatRequest, EmbeddingProvider, ModerationProvider, ModerationScores,
    ProviderConfig,
};

pub struct OpenAiCompatClient {
    config: ProviderConfig,
    http: reqwest::blocking::Client,
    /// Embedding model id; required before using the client as an
    /// [`EmbeddingProvider`].
    embed_model: Option<String>,
    /// Optional moderation model; omitted from the request when unset so the
    /// server default applies.
    moderation_model: Option<String>,
    last_request: Mutex<Option<Instant>>,
}

impl OpenAiCompatClient {
    pub fn new(config: ProviderConfig) -> Result<Self, CoreError> {
        config.validate()?;
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| CoreError::provider(ProviderErrorKind::Rejected, e.to_string()))?;
        Ok(OpenAiCompatClient {
            config,
            http,
            embed_model: None,
            moderation_model: None,
            last_request: Mutex::new(None),
        })
    }

    pub fn with_embed_model(mut self, model_id: impl Into<String>) -> Self {
        self.embed_model = Some(model_id.into());
        self
    }

    pub fn with_moderation_model(mut self, model_id: impl Into<String>) -> Self {
        self.moderation_model = Some(model_id.into());
        self
    }

    fn api_key(&self) -> Result<String, CoreError> {
        std::env::var(&self.config.api_key_env).map_err(|_| {
            CoreError::provider(
                ProviderErrorKind::Auth,
                format!("environment variable {} is not set", self.config.api_key_env),
            )
        })
    }

    /// Sleep long enough to respect the configured requests-per-minute.
    fn throttle(&self) {
        let min_interval = Duration::from_millis(60_000 / u64::from(self.config.requests_per_minute));
        let wait = {
            let mut last = self.last_request.lock().unwrap();
            let now = Instant::now();
            let wait = match *last {
                Some(prev) if now.duration_since(prev) < min_interval => {
                    min_interval - now.duration_since(prev)
                }
                _ => Duration::ZERO,
            };
            *last = Some(now + wait);
            wait
        };
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }

    fn post(&self, endpoint: &str, body: &Value) -> Result<Value, CoreError> {
        let key = self.api_key()?;
        let url = format!("{}/{}", self.config.base_url.trim_end_matches('/'), endpoint);

        let mut last_err = String::new();
        for attempt in 0..=self.config.max_retries {
            if attempt > 0 {
                let backoff =
                    Duration::from_millis(self.config.retry_backoff_ms.max(1) << (attempt - 1));
                log::warn!("{endpoint}: retrying in {backoff:?} after: {last_err}");
                std::thread::sleep(backoff);
            }
            self.throttle();
            let response = self.http.post(&url).bearer_auth(&key).json(body).send();
            match response {
                Ok(resp) => {
                    let status = resp.status();
                    let request_id = resp
                        .headers()
                        .get("x-request-id")
                        .and_then(|v| v.to_str().ok())
                        .map(str::to_string);
                    if status.is_success() {
                        return resp.json::<Value>().map_err(|e| {
                            CoreError::provider(ProviderErrorKind::Malformed, e.to_string())
                        });
                    }
                    let detail = resp.text().unwrap_or_default();
                    let id_note =
                        request_id.map(|id| format!(" (request id {id})")).unwrap_or_default();
                    last_err = format!("{endpoint}: HTTP {status}{id_note}: {detail:.200}");
                    if status.as_u16() == 401 || status.as_u16() == 403 {
                        return Err(CoreError::provider(ProviderErrorKind::Auth, last_err));
                    }
                    if !(status.as_u16() == 429 || status.is_server_error()) {
                        return Err(CoreError::provider(ProviderErrorKind::Rejected, last_err));
                    }
                }
                Err(e) => last_err = format!("{endpoint}: {e}"),
            }
        }
        Err(CoreError::provider(
            ProviderErrorKind::Exhausted,
            format!("{last_err} (after {} attempts)", self.config.max_retries + 1),
        ))
    }
}

impl ChatProvider for OpenAiCompatClient {
    fn chat(&self, request: &ChatRequest) -> Result<String, CoreError> {
        request.validate()?;
        let body = json!({
            "model": request.model_id,
            "messages": [{"role": "user", "content": request.prompt}],
            "max_tokens": request.max_new_tokens,
            "temperature": request.temperature,
        });
        let response = self.post("chat/completions", &body)?;
        response["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| {
                CoreError::provider(
                    ProviderErrorKind::Malformed,
                    "chat/completions: no choices[0].message.content in response",
                )
            })
    }
}

impl EmbeddingProvider for OpenAiCompatClient {
    fn model_id(&self) -> &str {
        self.embed_model.as_deref().unwrap_or("")
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, CoreError> {
        if texts.is_empty() {
            return Err(CoreError::validation("embed: no texts given"));
        }
        let model = self.embed_model.as_deref().ok_or_else(|| {
            CoreError::config("embed: client was built without an embedding model")
        })?;
        let body = json!({ "model": model, "input": texts });
        let response = self.post("embeddings", &body)?;
        let data = response["data"].as_array().ok_or_else(|| {
            CoreError::provider(ProviderErrorKind::Malformed, "embeddings: no data array")
        })?;
        if data.len() != texts.len() {
            return Err(CoreError::provider(
                ProviderErrorKind::Malformed,
                format!("embeddings: got {} vectors for {} inputs", data.len(), texts.len()),
            ));
        }
        // The API is allowed to reorder; the `index` field is authoritative.
        let mut out: Vec<Option<Vec<f64>>> = vec![None; texts.len()];
        for item in data {
            let idx = item["index"].as_u64().ok_or_else(|| {
                CoreError::provider(ProviderErrorKind::Malformed, "embeddings: item missing index")
            })? as usize;
            let vec = item["embedding"]
                .as_array()
                .ok_or_else(|| {
                    CoreError::provider(
                        ProviderErrorKind::Malformed,
                        "embeddings: item missing embedding",
                    )
                })?
                .iter()
                .map(|v| v.as_f64().unwrap_or(f64::NAN))
                .collect();
            if idx >= out.len() || out[idx].is_some() {
                return Err(CoreError::provider(
                    ProviderErrorKind::Malformed,
                    format!("embeddings: bad or duplicate index {idx}"),
                ));
            }
            out[idx] = Some(vec);
        }
        Ok(out.into_iter().map(|v| v.unwrap()).collect())
    }
}

impl ModerationProvider for OpenAiCompatClient {
    fn moderate(&self, text: &str) -> Result<ModerationScores, CoreError> {
        if text.trim().is_empty() {
            return Err(CoreError::validation("moderate: empty text"));
        }
        let mut body = json!({ "input": text });
        if let Some(model) = &self.moderation_model {
            body["model"] = json!(model);
        }
        let response = self.post("moderations", &body)?;
        let categories = response["results"][0]["category_scores"].as_object().ok_or_else(|| {
            CoreError::provider(
                ProviderErrorKind::Malformed,
                "moderations: no results[0].category_scores",
            )
        })?;
        let mut scores = ModerationScores::default();
        for (name, value) in categories {
            scores.scores.insert(name.clone(), value.as_f64().unwrap_or(0.0));
        }
        Ok(scores)
    }
}
