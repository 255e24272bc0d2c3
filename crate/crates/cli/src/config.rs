//! Experiment configuration: one versioned TOML file shared by every
//! command, with `${VAR}` environment interpolation, plus the layout of
//! artifacts under the work directory.

use std::fs;
use std::path::{Path, PathBuf};

use csrag_core::corpus::{ChunkPolicy, CrawlSpec, LoadOptions};
use csrag_core::index::{Bm25Params, RetrieverId};
use csrag_core::metrics::MetricConfig;
use csrag_core::pipeline;
use csrag_core::providers::ProviderConfig;
use serde::Deserialize;

use crate::CliError;

/// Config schema version this build reads.
pub const CONFIG_VERSION: u64 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Schema version; must equal [`CONFIG_VERSION`].
    pub version: u64,
    #[serde(default)]
    pub paths: PathsSection,
    pub corpus: CorpusSection,
    /// Optional crawler setup; mutually exclusive with `corpus.input`.
    pub crawl: Option<CrawlSpec>,
    #[serde(default)]
    pub retrieval: RetrievalSection,
    #[serde(default)]
    pub providers: ProvidersSection,
    pub run: RunSection,
    /// Metric tunables. Omit the whole table for the defaults; a partial
    /// table is rejected so a config never silently mixes the two.
    pub metrics: Option<MetricConfig>,
    #[serde(default)]
    pub human: HumanSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsSection {
    /// Directory every artifact is written under.
    #[serde(default = "default_work_dir")]
    pub work_dir: PathBuf,
}

impl Default for PathsSection {
    fn default() -> Self {
        PathsSection { work_dir: default_work_dir() }
    }
}

fn default_work_dir() -> PathBuf {
    PathBuf::from("work")
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSection {
    /// Documents to ingest: a JSON/JSONL file or a directory tree of them.
    pub input: Option<PathBuf>,
    /// Hate-speech dataset CSV (hs_id, text, target, reference_cs).
    pub hs_file: Option<PathBuf>,
    /// Inclusive publication-year bounds for knowledge-base documents.
    #[serde(default = "default_year_range")]
    pub year_range: (i32, i32),
    /// Chunk size bounds in tokens.
    #[serde(default)]
    pub chunking: ChunkPolicy,
}

fn default_year_range() -> (i32, i32) {
    LoadOptions::default().year_range
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetrievalSection {
    /// Evidence passages retrieved per query.
    #[serde(default = "default_k")]
    pub k: usize,
    /// BM25 tunables.
    #[serde(default)]
    pub bm25: Bm25Params,
}

impl Default for RetrievalSection {
    fn default() -> Self {
        RetrievalSection { k: default_k(), bm25: Bm25Params::default() }
    }
}

fn default_k() -> usize {
    3
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProvidersSection {
    /// Chat endpoint used for generation, and for the judge unless
    /// `providers.judge` carries its own connection.
    pub generation: Option<ProviderSection>,
    /// Embedding endpoint behind the `dense_a` arm; also scores BERTScore.
    pub embedding_a: Option<ProviderSection>,
    /// Embedding endpoint behind the `dense_b` arm.
    pub embedding_b: Option<ProviderSection>,
    /// Moderation endpoint for safety scoring; omit to skip the column.
    pub moderation: Option<ProviderSection>,
    /// Judge model, with optional connection fields of its own.
    pub judge: Option<ProviderSection>,
}

/// One remote endpoint. Only the name of the secret appears here: the API
/// key is read from the `api_key_env` environment variable at call time and
/// never stored, logged, or written back out.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderSection {
    pub base_url: Option<String>,
    /// Name of the environment variable holding the API key.
    pub api_key_env: Option<String>,
    /// Model identifier sent with each request.
    pub model_id: Option<String>,
    pub timeout_secs: Option<u64>,
    pub max_retries: Option<u32>,
    pub requests_per_minute: Option<u32>,
    pub retry_backoff_ms: Option<u64>,
}

impl ProviderSection {
    /// Connection config for this endpoint, with the library defaults for
    /// anything unset here.
    pub fn connection(&self, section: &str) -> Result<ProviderConfig, CliError> {
        let base_url = self.base_url.as_ref().ok_or_else(|| {
            CliError::config(format!("providers.{section}: base_url is not set"))
        })?;
        let api_key_env = self.api_key_env.as_ref().ok_or_else(|| {
            CliError::config(format!("providers.{section}: api_key_env is not set"))
        })?;
        let mut raw = serde_json::Map::new();
        raw.insert("base_url".into(), serde_json::json!(base_url));
        raw.insert("api_key_env".into(), serde_json::json!(api_key_env));
        if let Some(v) = self.timeout_secs {
            raw.insert("timeout_secs".into(), serde_json::json!(v));
        }
        if let Some(v) = self.max_retries {
            raw.insert("max_retries".into(), serde_json::json!(v));
        }
        if let Some(v) = self.requests_per_minute {
            raw.insert("requests_per_minute".into(), serde_json::json!(v));
        }
        if let Some(v) = self.retry_backoff_ms {
            raw.insert("retry_backoff_ms".into(), serde_json::json!(v));
        }
        let config: ProviderConfig = serde_json::from_value(serde_json::Value::Object(raw))
            .map_err(|e| CliError::config(format!("providers.{section}: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn require_model(&self, section: &str) -> Result<&str, CliError> {
        self.model_id.as_deref().ok_or_else(|| {
            CliError::config(format!("providers.{section}: model_id is not set"))
        })
    }

    /// Whether this section carries its own connection, as opposed to only
    /// naming a model.
    pub fn has_connection(&self) -> bool {
        self.base_url.is_some() || self.api_key_env.is_some()
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// Retriever arms of the grid: bm25, dense_a, dense_b, none.
    pub retrievers: Vec<String>,
    /// Model ids of the grid.
    pub models: Vec<String>,
    /// Single seed behind every random choice in the pipeline.
    pub seed: u64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HumanSection {
    /// Annotation CSV aggregated by `csrag stats`.
    pub annotations: Option<PathBuf>,
}

impl Config {
    /// Read a config file: interpolate `${VAR}` references, parse, and
    /// validate. Every failure here maps to the config exit code.
    pub fn load(path: &Path) -> Result<Config, CliError> {
        let raw = fs::read_to_string(path).map_err(|e| {
            CliError::config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let mut value: toml::Value = toml::from_str(&raw)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        interpolate(&mut value)
            .map_err(|m| CliError::config(format!("{}: {m}", path.display())))?;
        let config: Config = value
            .try_into()
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        config.validate().map_err(|e| CliError {
            message: format!("{}: {}", path.display(), e.message),
            code: e.code,
        })?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.version != CONFIG_VERSION {
            return Err(CliError::config(format!(
                "config version {} is not supported; this build reads version {CONFIG_VERSION}",
                self.version
            )));
        }
        self.corpus.chunking.validate()?;
        let (lo, hi) = self.corpus.year_range;
        if lo > hi {
            return Err(CliError::config(format!(
                "corpus.year_range: {lo} is after {hi}"
            )));
        }
        self.retrieval.bm25.validate()?;
        if self.retrieval.k == 0 {
            return Err(CliError::config("retrieval.k must be at least 1"));
        }
        self.run_retrievers()?;
        if self.run.models.is_empty() {
            return Err(CliError::config("run.models is empty"));
        }
        if let Some(crawl) = &self.crawl {
            crawl.validate()?;
            if self.corpus.input.is_some() {
                return Err(CliError::config(
                    "corpus.input and [crawl] are both set; configure one document source",
                ));
            }
        }
        Ok(())
    }

    /// The configured grid arms, parsed.
    pub fn run_retrievers(&self) -> Result<Vec<RetrieverId>, CliError> {
        parse_retrievers(&self.run.retrievers)
    }
}

/// Parse retriever names, rejecting unknown names and duplicates.
pub fn parse_retrievers(names: &[String]) -> Result<Vec<RetrieverId>, CliError> {
    if names.is_empty() {
        return Err(CliError::config("run.retrievers is empty"));
    }
    let mut out = Vec::new();
    for name in names {
        let id = RetrieverId::parse(name)?;
        if out.contains(&id) {
            return Err(CliError::config(format!("retriever {name} listed twice")));
        }
        out.push(id);
    }
    Ok(out)
}

/// Replace `${VAR}` with that environment variable's value in every string
/// of the parsed TOML. Meant for paths and hosts; secrets stay out of the
/// config by naming their variable in `api_key_env` instead.
fn interpolate(value: &mut toml::Value) -> Result<(), String> {
    match value {
        toml::Value::String(s) => {
            if s.contains("${") {
                *s = interpolate_str(s)?;
            }
        }
        toml::Value::Array(items) => {
            for item in items {
                interpolate(item)?;
            }
        }
        toml::Value::Table(table) => {
            for (_, item) in table.iter_mut() {
                interpolate(item)?;
            }
        }
        _ => {}
    }
    Ok(())
}

fn interpolate_str(s: &str) -> Result<String, String> {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(start) = rest.find("${") {
        out.push_str(&rest[..start]);
        let tail = &rest[start + 2..];
        let end = tail
            .find('}')
            .ok_or_else(|| format!("unterminated ${{ in {s:?}"))?;
        let name = &tail[..end];
        let well_formed =
            !name.is_empty() && name.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_');
        if !well_formed {
            return Err(format!("bad environment reference ${{{name}}}"));
        }
        let value = std::env::var(name).map_err(|_| {
            format!("environment variable {name} is not set (referenced as ${{{name}}})")
        })?;
        out.push_str(&value);
        rest = &tail[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

/// Artifact layout under the work directory. Commands communicate only
/// through these files, so every stage can be rerun on its own.
#[derive(Debug, Clone)]
pub struct Layout {
    work_dir: PathBuf,
}

impl Layout {
    pub fn new(work_dir: &Path) -> Self {
        Layout { work_dir: work_dir.to_path_buf() }
    }

    pub fn kb_dir(&self) -> PathBuf {
        self.work_dir.join("kb")
    }

    /// Where crawled documents land before ingestion.
    pub fn raw_dir(&self) -> PathBuf {
        self.kb_dir().join("raw")
    }

    pub fn documents_file(&self) -> PathBuf {
        self.kb_dir().join("documents.jsonl")
    }

    pub fn chunks_file(&self) -> PathBuf {
        self.kb_dir().join("chunks.jsonl")
    }

    pub fn kb_manifest_file(&self) -> PathBuf {
        self.kb_dir().join("manifest.csv")
    }

    pub fn kb_rejects_file(&self) -> PathBuf {
        self.kb_dir().join("rejects.jsonl")
    }

    pub fn crawl_rejects_file(&self) -> PathBuf {
        self.kb_dir().join("crawl_rejects.jsonl")
    }

    pub fn index_dir(&self) -> PathBuf {
        self.work_dir.join("index")
    }

    pub fn snapshot_file(&self, retriever: RetrieverId) -> PathBuf {
        self.index_dir().join(format!("{}.json", retriever.as_str()))
    }

    pub fn run_dir(&self) -> PathBuf {
        self.work_dir.join("run")
    }

    pub fn cs_file(&self) -> PathBuf {
        self.run_dir().join(pipeline::CS_FILE)
    }

    pub fn run_manifest_file(&self) -> PathBuf {
        self.run_dir().join(pipeline::MANIFEST_FILE)
    }

    pub fn eval_dir(&self) -> PathBuf {
        self.work_dir.join("eval")
    }

    pub fn metrics_json_file(&self) -> PathBuf {
        self.eval_dir().join("metrics.json")
    }

    pub fn metrics_csv_file(&self) -> PathBuf {
        self.eval_dir().join("metrics.csv")
    }

    pub fn judge_dir(&self) -> PathBuf {
        self.work_dir.join("judge")
    }

    pub fn stats_dir(&self) -> PathBuf {
        self.work_dir.join("stats")
    }

    pub fn significance_json_file(&self) -> PathBuf {
        self.stats_dir().join("significance.json")
    }

    pub fn significance_csv_file(&self) -> PathBuf {
        self.stats_dir().join("significance.csv")
    }

    pub fn human_dir(&self) -> PathBuf {
        self.work_dir.join("human")
    }

    pub fn human_json_file(&self) -> PathBuf {
        self.human_dir().join("human_eval.json")
    }

    pub fn human_csv_file(&self) -> PathBuf {
        self.human_dir().join("human_eval.csv")
    }

    pub fn report_dir(&self) -> PathBuf {
        self.work_dir.join("report")
    }

    pub fn report_file(&self) -> PathBuf {
        self.report_dir().join("report.md")
    }
}
