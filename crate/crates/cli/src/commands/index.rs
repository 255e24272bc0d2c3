//! `csrag index`: build a retrieval snapshot for every configured arm.

use csrag_core::index::{save_snapshot, Bm25Index, IndexKind, RetrieverId, VectorIndex};

use crate::commands::{arm_embedder, load_chunks};
use crate::config::{Config, Layout};
use crate::CliError;

pub fn run(config: &Config, layout: &Layout, stub: bool) -> Result<u8, CliError> {
    let chunks = load_chunks(layout)?;
    let retrievers = config.run_retrievers()?;
    std::fs::create_dir_all(layout.index_dir()).map_err(|e| {
        CliError::failure(format!("cannot create {}: {e}", layout.index_dir().display()))
    })?;

    let mut built = 0usize;
    for retriever in retrievers {
        let kind = match retriever {
            RetrieverId::None => continue,
            RetrieverId::Bm25 => {
                IndexKind::Bm25(Bm25Index::build(&chunks, config.retrieval.bm25)?)
            }
            RetrieverId::DenseA | RetrieverId::DenseB => {
                let embedder = arm_embedder(config, stub, retriever)?;
                IndexKind::Dense(VectorIndex::build(&chunks, embedder.as_ref())?)
            }
        };
        let path = layout.snapshot_file(retriever);
        save_snapshot(&path, retriever.as_str(), &kind)?;
        println!("wrote {} ({} chunks)", path.display(), chunks.len());
        built += 1;
    }
    if built == 0 {
        println!("no retrieval arms configured; nothing to index");
    }
    Ok(0)
}
