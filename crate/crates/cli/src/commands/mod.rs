//! The implementations behind the `csrag` subcommands, plus the small IO
//! and provider-wiring helpers they share.

pub mod evaluate;
pub mod index;
pub mod ingest;
pub mod judge;
pub mod report;
pub mod run;
pub mod stats;

use std::fs;
use std::path::Path;

use csrag_core::corpus::{load_hs_dataset, Chunk, HateSpeechInstance};
use csrag_core::index::RetrieverId;
use csrag_core::providers::{
    ChatProvider, EmbeddingProvider, ModerationProvider, OpenAiCompatClient, StubChat,
    StubEmbedding, StubModeration,
};

use crate::config::{Config, Layout};
use crate::CliError;

/// Report a missing input artifact: the config exit code plus a hint at the
/// command that produces the file.
pub fn require_file(path: &Path, hint: &str) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::config(format!("missing {}; {hint}", path.display())))
    }
}

/// Write through a sibling temp file and rename, so a reread never sees a
/// half-written artifact.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| {
            CliError::failure(format!("cannot create {}: {e}", parent.display()))
        })?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)
        .map_err(|e| CliError::failure(format!("cannot write {}: {e}", tmp.display())))?;
    fs::rename(&tmp, path)
        .map_err(|e| CliError::failure(format!("cannot finish {}: {e}", path.display())))?;
    Ok(())
}

pub fn read_to_string(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::failure(format!("cannot read {}: {e}", path.display())))
}

pub fn write_json_pretty<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut body = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::failure(format!("cannot encode {}: {e}", path.display())))?;
    body.push('\n');
    write_atomic(path, &body)
}

pub fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let raw = read_to_string(path)?;
    let mut rows = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        rows.push(serde_json::from_str(line).map_err(|e| {
            CliError::failure(format!("{} line {}: {e}", path.display(), i + 1))
        })?);
    }
    Ok(rows)
}

pub fn write_jsonl<T: serde::Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let mut body = String::new();
    for row in rows {
        body.push_str(&serde_json::to_string(row).map_err(|e| {
            CliError::failure(format!("cannot encode a row of {}: {e}", path.display()))
        })?);
        body.push('\n');
    }
    write_atomic(path, &body)
}

/// Load the chunked knowledge base written by `csrag ingest`.
pub fn load_chunks(layout: &Layout) -> Result<Vec<Chunk>, CliError> {
    let path = layout.chunks_file();
    require_file(&path, "run `csrag ingest` first")?;
    read_jsonl(&path)
}

/// Load the configured hate-speech dataset, logging lenient-load fallout.
pub fn load_hs(config: &Config) -> Result<Vec<HateSpeechInstance>, CliError> {
    let path = config
        .corpus
        .hs_file
        .as_ref()
        .ok_or_else(|| CliError::config("corpus.hs_file is not set"))?;
    require_file(path, "point corpus.hs_file at the dataset CSV")?;
    let load = load_hs_dataset(path)?;
    for reject in &load.rejects {
        log::warn!("{}: {}", reject.location, reject.reason);
    }
    if load.unknown_target_count > 0 {
        log::warn!(
            "{} rows with unrecognized target labels were loaded as OTHER",
            load.unknown_target_count
        );
    }
    Ok(load.instances)
}

/// Chat provider behind generation: the deterministic stub or the
/// configured remote endpoint.
pub fn chat_provider(config: &Config, stub: bool) -> Result<Box<dyn ChatProvider>, CliError> {
    if stub {
        return Ok(Box::new(StubChat::new(config.run.seed)));
    }
    let section = config.providers.generation.as_ref().ok_or_else(|| {
        CliError::config("providers.generation is not configured; set it or pass --stub")
    })?;
    Ok(Box::new(OpenAiCompatClient::new(section.connection("generation")?)?))
}

/// Stub embedding model id for a dense arm. The seed is part of the id so a
/// snapshot built under one seed refuses queries embedded under another.
pub fn stub_embed_model(arm: RetrieverId, seed: u64) -> String {
    format!("stub-{}-s{seed}", arm.as_str())
}

/// Embedding provider behind a dense retriever arm.
pub fn arm_embedder(
    config: &Config,
    stub: bool,
    arm: RetrieverId,
) -> Result<Box<dyn EmbeddingProvider>, CliError> {
    let (name, section) = match arm {
        RetrieverId::DenseA => ("embedding_a", &config.providers.embedding_a),
        RetrieverId::DenseB => ("embedding_b", &config.providers.embedding_b),
        _ => {
            return Err(CliError::config(format!(
                "retriever {} has no embedding arm",
                arm.as_str()
            )))
        }
    };
    if stub {
        let model = stub_embed_model(arm, config.run.seed);
        return Ok(Box::new(StubEmbedding::with_model_id(config.run.seed, model)));
    }
    let section = section.as_ref().ok_or_else(|| {
        CliError::config(format!(
            "providers.{name} is not configured for retriever {}; set it or pass --stub",
            arm.as_str()
        ))
    })?;
    let model = section.require_model(name)?.to_string();
    Ok(Box::new(OpenAiCompatClient::new(section.connection(name)?)?.with_embed_model(model)))
}

/// Embedding provider used for BERTScore.
pub fn scoring_embedder(
    config: &Config,
    stub: bool,
) -> Result<Box<dyn EmbeddingProvider>, CliError> {
    if stub {
        return Ok(Box::new(StubEmbedding::new(config.run.seed)));
    }
    let section = config.providers.embedding_a.as_ref().ok_or_else(|| {
        CliError::config(
            "providers.embedding_a is not configured (BERTScore needs an embedder); set it or pass --stub",
        )
    })?;
    let model = section.require_model("embedding_a")?.to_string();
    Ok(Box::new(
        OpenAiCompatClient::new(section.connection("embedding_a")?)?.with_embed_model(model),
    ))
}

/// Moderation provider for safety scores; `None` drops the safety column.
pub fn moderation_provider(
    config: &Config,
    stub: bool,
) -> Result<Option<Box<dyn ModerationProvider>>, CliError> {
    if stub {
        return Ok(Some(Box::new(StubModeration::with_default_table())));
    }
    let Some(section) = &config.providers.moderation else {
        return Ok(None);
    };
    let mut client = OpenAiCompatClient::new(section.connection("moderation")?)?;
    if let Some(model) = &section.model_id {
        client = client.with_moderation_model(model.clone());
    }
    Ok(Some(Box::new(client)))
}
