//! `csrag run`: generate counter-speech across the retriever x model grid.

use std::collections::BTreeMap;

use clap::Args;
use csrag_core::corpus::Chunk;
use csrag_core::index::{load_snapshot, IndexKind, RetrieverId};
use csrag_core::pipeline::{run_grid, FailurePolicy, GridEnv, RetrieverSet, RunSpec};
use csrag_core::providers::EmbeddingProvider;

use crate::commands::{arm_embedder, chat_provider, load_chunks, load_hs, require_file};
use crate::config::{parse_retrievers, Config, Layout};
use crate::{CliError, EXIT_INCOMPATIBLE};

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Retriever arms, comma separated (default: run.retrievers from the
    /// config).
    #[arg(long, value_delimiter = ',')]
    pub retrievers: Option<Vec<String>>,

    /// Model ids, comma separated (default: run.models from the config).
    #[arg(long, value_delimiter = ',')]
    pub models: Option<Vec<String>>,

    /// Record per-cell failures in the run manifest and keep generating
    /// instead of stopping at the first one.
    #[arg(long)]
    pub keep_going: bool,
}

pub fn run(config: &Config, layout: &Layout, stub: bool, args: &RunArgs) -> Result<u8, CliError> {
    let retrievers = match &args.retrievers {
        Some(names) => parse_retrievers(names)?,
        None => config.run_retrievers()?,
    };
    let models = args.models.clone().unwrap_or_else(|| config.run.models.clone());

    let hs = load_hs(config)?;
    let chunks = load_chunks(layout)?;
    let chunk_map: BTreeMap<String, Chunk> =
        chunks.into_iter().map(|c| (c.chunk_id.clone(), c)).collect();

    let chat = chat_provider(config, stub)?;

    // The embedders live here so the retriever set can borrow them.
    let mut embedders: BTreeMap<RetrieverId, Box<dyn EmbeddingProvider>> = BTreeMap::new();
    for retriever in &retrievers {
        if matches!(retriever, RetrieverId::DenseA | RetrieverId::DenseB) {
            embedders.insert(*retriever, arm_embedder(config, stub, *retriever)?);
        }
    }

    let mut set = RetrieverSet::new();
    for retriever in &retrievers {
        if *retriever == RetrieverId::None {
            continue;
        }
        let path = layout.snapshot_file(*retriever);
        require_file(&path, "run `csrag index` first")?;
        let (header, kind) = load_snapshot(&path)?;
        if header.retriever_id != retriever.as_str() {
            return Err(CliError {
                message: format!(
                    "{} holds a snapshot for {}, expected {}",
                    path.display(),
                    header.retriever_id,
                    retriever.as_str()
                ),
                code: EXIT_INCOMPATIBLE,
            });
        }
        set = match (retriever, kind) {
            (RetrieverId::Bm25, IndexKind::Bm25(index)) => set.with_bm25(index),
            (RetrieverId::DenseA, IndexKind::Dense(index)) => {
                set.with_dense_a(index, embedders[retriever].as_ref())
            }
            (RetrieverId::DenseB, IndexKind::Dense(index)) => {
                set.with_dense_b(index, embedders[retriever].as_ref())
            }
            (retriever, _) => {
                return Err(CliError {
                    message: format!(
                        "{} does not hold a {} index",
                        path.display(),
                        retriever.as_str()
                    ),
                    code: EXIT_INCOMPATIBLE,
                })
            }
        };
    }

    let mut spec = RunSpec::new(retrievers, models, layout.run_dir(), config.run.seed);
    spec.k = config.retrieval.k;
    if args.keep_going {
        spec.policy = FailurePolicy::KeepGoing;
    }
    spec.validate()?;

    let env = GridEnv { retrievers: &set, chunks: &chunk_map, chat: chat.as_ref() };
    let manifest = run_grid(&spec, &env, &hs)?;

    println!(
        "grid complete: {} cells finished, {} failed -> {}",
        manifest.completed_cells(),
        manifest.failed_cells(),
        layout.run_dir().display()
    );
    if manifest.failed_cells() > 0 {
        println!(
            "failed cells are recorded in {}; rerun retries them",
            layout.run_manifest_file().display()
        );
    }
    Ok(0)
}
