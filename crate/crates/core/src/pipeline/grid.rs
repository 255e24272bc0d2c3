//! Grid runner: executes the pipeline over every (hs, retriever, model)
//! cell, persisting outputs and a resumable manifest after each instance.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::corpus::{Chunk, HateSpeechInstance};
use crate::error::CoreError;
use crate::index::{RetrievalResult, RetrieverId};
use crate::pipeline::prompts::{
    build_context, enforce_two_sentences, prompt_hash, render_cs_no_rag, render_cs_rag,
    render_summarization,
};
use crate::pipeline::{CounterSpeech, EvidenceSummary, RetrieverSet};
use crate::providers::{ChatProvider, ChatRequest};

pub const SUMMARIES_FILE: &str = "summaries.csv";
pub const CS_FILE: &str = "cs.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailurePolicy {
    /// Abort the run on the first failed cell (after persisting progress).
    FailFast,
    /// Record the failure in the manifest and keep running.
    KeepGoing,
}

#[derive(Debug, Clone)]
pub struct RunSpec {
    pub retrievers: Vec<RetrieverId>,
    pub models: Vec<String>,
    /// Evidence chunks per RAG cell.
    pub k: usize,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub policy: FailurePolicy,
}

impl RunSpec {
    pub fn new(
        retrievers: Vec<RetrieverId>,
        models: Vec<String>,
        output_dir: impl Into<PathBuf>,
        seed: u64,
    ) -> Self {
        RunSpec {
            retrievers,
            models,
            k: 3,
            output_dir: output_dir.into(),
            seed,
            policy: FailurePolicy::FailFast,
        }
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        if self.retrievers.is_empty() {
            return Err(CoreError::validation("run spec: no retrievers"));
        }
        if self.models.is_empty() {
            return Err(CoreError::validation("run spec: no models"));
        }
        let unique: BTreeSet<_> = self.retrievers.iter().collect();
        if unique.len() != self.retrievers.len() {
            return Err(CoreError::validation("run spec: duplicate retriever"));
        }
        let unique: BTreeSet<_> = self.models.iter().collect();
        if unique.len() != self.models.len() {
            return Err(CoreError::validation("run spec: duplicate model id"));
        }
        if self.models.iter().any(|m| m.trim().is_empty()) {
            return Err(CoreError::validation("run spec: empty model id"));
        }
        if self.k == 0 {
            return Err(CoreError::validation("run spec: k must be at least 1"));
        }
        if self.k != 3 && self.retrievers.iter().any(|r| r.is_rag()) {
            return Err(CoreError::validation(
                "run spec: generation consumes exactly 3 evidence summaries, so k must be 3 \
                 when any RAG retriever is enabled",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Completed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub status: CellStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_hash: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub started_at: String,
    pub finished_at: String,
    pub duration_ms: u64,
}

/// Run state on disk. Cells are keyed `{hs_id}|{retriever}|{model}`; a rerun
/// skips keys recorded as completed and retries everything else.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub seed: u64,
    pub k: usize,
    pub retrievers: Vec<RetrieverId>,
    pub models: Vec<String>,
    pub cells: BTreeMap<String, CellRecord>,
}

impl RunManifest {
    fn new(spec: &RunSpec) -> Self {
        RunManifest {
            seed: spec.seed,
            k: spec.k,
            retrievers: spec.retrievers.clone(),
            models: spec.models.clone(),
            cells: BTreeMap::new(),
        }
    }

    fn matches_spec(&self, spec: &RunSpec) -> Result<(), CoreError> {
        if self.seed != spec.seed
            || self.k != spec.k
            || self.retrievers != spec.retrievers
            || self.models != spec.models
        {
            return Err(CoreError::incompatible(
                "existing run manifest was produced with different run parameters; \
                 use a fresh output directory to change seed, k, retrievers, or models",
            ));
        }
        Ok(())
    }

    pub fn completed_cells(&self) -> usize {
        self.cells.values().filter(|c| c.status == CellStatus::Completed).count()
    }

    pub fn failed_cells(&self) -> usize {
        self.cells.values().filter(|c| c.status == CellStatus::Failed).count()
    }
}

pub fn cell_key(hs_id: &str, retriever: RetrieverId, model_id: &str) -> String {
    format!("{hs_id}|{retriever}|{model_id}")
}

/// Everything a grid run reads: retrieval indexes, the chunk store backing
/// them, and the chat provider serving every model id in the spec.
pub struct GridEnv<'a> {
    pub retrievers: &'a RetrieverSet<'a>,
    pub chunks: &'a BTreeMap<String, Chunk>,
    pub chat: &'a dyn ChatProvider,
}

/// Summarize one evidence paragraph with the given model. The completion is
/// stored untruncated.
pub fn summarize_evidence(
    chat: &dyn ChatProvider,
    model_id: &str,
    paragraph: &Chunk,
) -> Result<String, CoreError> {
    if paragraph.text.trim().is_empty() {
        return Err(CoreError::validation(format!(
            "chunk {} has no text to summarize",
            paragraph.chunk_id
        )));
    }
    let prompt = render_summarization(&paragraph.text);
    chat.chat(&ChatRequest::new(model_id, prompt))
}

/// Generate one counter-speech. Three summaries select the evidence-grounded
/// template, zero selects the direct template; anything else is an error.
/// The completion is clipped to two sentences and the hash of the rendered
/// prompt is recorded on the output.
pub fn generate_cs(
    chat: &dyn ChatProvider,
    model_id: &str,
    hs: &HateSpeechInstance,
    summaries: &[EvidenceSummary],
) -> Result<CounterSpeech, CoreError> {
    let (prompt, retriever) = match summaries.len() {
        0 => (render_cs_no_rag(&hs.text), RetrieverId::None),
        3 => {
            let texts: Vec<&str> = summaries.iter().map(|s| s.summary.as_str()).collect();
            (render_cs_rag(&build_context(&texts), &hs.text), summaries[0].retriever)
        }
        n => {
            return Err(CoreError::validation(format!(
                "generation needs 0 or 3 evidence summaries, got {n}"
            )))
        }
    };
    let hash = prompt_hash(&prompt);
    let completion = chat.chat(&ChatRequest::new(model_id, prompt))?;
    let cs = CounterSpeech {
        hs_id: hs.hs_id.clone(),
        retriever,
        model_id: model_id.to_string(),
        text: enforce_two_sentences(&completion),
        evidence: summaries.to_vec(),
        prompt_hash: hash,
    };
    cs.validate()?;
    Ok(cs)
}

/// Execute the full grid. Outputs land in `spec.output_dir` as
/// `summaries.csv`, `cs.jsonl`, and `manifest.json`, rewritten atomically
/// after every instance. Rerunning over an existing directory keeps
/// completed cells and executes only the rest; failed cells are retried.
pub fn run_grid(
    spec: &RunSpec,
    env: &GridEnv,
    hs_set: &[HateSpeechInstance],
) -> Result<RunManifest, CoreError> {
    spec.validate()?;
    for &retriever in &spec.retrievers {
        if !env.retrievers.supports(retriever) {
            return Err(CoreError::config(format!(
                "run spec includes retriever {retriever} but no index is loaded for it"
            )));
        }
    }
    let mut order: Vec<&HateSpeechInstance> = hs_set.iter().collect();
    order.sort_by(|a, b| a.hs_id.cmp(&b.hs_id));
    for pair in order.windows(2) {
        if pair[0].hs_id == pair[1].hs_id {
            return Err(CoreError::validation(format!("duplicate hs id {:?}", pair[0].hs_id)));
        }
    }

    fs::create_dir_all(&spec.output_dir)
        .map_err(|e| CoreError::io(spec.output_dir.clone(), e))?;
    let manifest_path = spec.output_dir.join(MANIFEST_FILE);
    let cs_path = spec.output_dir.join(CS_FILE);

    let mut manifest = if manifest_path.exists() {
        let existing = load_run_manifest(&manifest_path)?;
        existing.matches_spec(spec)?;
        existing
    } else {
        RunManifest::new(spec)
    };

    // The cell universe of this invocation. Stale cells (an hs id no longer
    // in the input set) and failed cells are dropped; their artifact rows are
    // compacted away below.
    let mut universe: BTreeSet<String> = BTreeSet::new();
    for hs in &order {
        for &retriever in &spec.retrievers {
            for model in &spec.models {
                universe.insert(cell_key(&hs.hs_id, retriever, model));
            }
        }
    }
    manifest
        .cells
        .retain(|key, cell| cell.status == CellStatus::Completed && universe.contains(key));

    // Completed cells must still have their output row on disk; anything
    // else reruns. Evidence rows are rebuilt from the outputs, which embed
    // them, so the summaries file needs no separate recovery pass.
    let mut outputs: Vec<CounterSpeech> =
        if cs_path.exists() { load_counter_speech_jsonl(&cs_path)? } else { Vec::new() };
    outputs.retain(|cs| {
        manifest.cells.contains_key(&cell_key(&cs.hs_id, cs.retriever, &cs.model_id))
    });
    let present: BTreeSet<String> =
        outputs.iter().map(|cs| cell_key(&cs.hs_id, cs.retriever, &cs.model_id)).collect();
    manifest.cells.retain(|key, _| present.contains(key));

    flush(spec, &outputs, &manifest)?;

    for hs in &order {
        let mut dirty = false;
        for &retriever in &spec.retrievers {
            let pending: Vec<&String> = spec
                .models
                .iter()
                .filter(|m| !manifest.cells.contains_key(&cell_key(&hs.hs_id, retriever, m)))
                .collect();
            if pending.is_empty() {
                continue;
            }
            let hits: Option<Result<Vec<RetrievalResult>, CoreError>> = retriever
                .is_rag()
                .then(|| env.retrievers.retrieve(retriever, &hs.text, spec.k));

            for model in pending {
                let key = cell_key(&hs.hs_id, retriever, model);
                let started = SystemTime::now();
                let clock = Instant::now();
                let outcome = match &hits {
                    Some(Err(e)) => Err(CoreError::pipeline(format!("retrieval failed: {e}"))),
                    Some(Ok(h)) => run_rag_cell(spec, env, hs, model, h),
                    None => generate_cs(env.chat, model, hs, &[]),
                };
                let finished = SystemTime::now();
                let duration_ms = clock.elapsed().as_millis() as u64;
                dirty = true;
                match outcome {
                    Ok(cs) => {
                        manifest.cells.insert(
                            key,
                            CellRecord {
                                status: CellStatus::Completed,
                                prompt_hash: Some(cs.prompt_hash.clone()),
                                error: None,
                                started_at: rfc3339_utc(started),
                                finished_at: rfc3339_utc(finished),
                                duration_ms,
                            },
                        );
                        outputs.push(cs);
                    }
                    Err(e) => {
                        let message = e.to_string();
                        manifest.cells.insert(
                            key.clone(),
                            CellRecord {
                                status: CellStatus::Failed,
                                prompt_hash: None,
                                error: Some(message.clone()),
                                started_at: rfc3339_utc(started),
                                finished_at: rfc3339_utc(finished),
                                duration_ms,
                            },
                        );
                        if spec.policy == FailurePolicy::FailFast {
                            flush(spec, &outputs, &manifest)?;
                            return Err(CoreError::pipeline(format!(
                                "cell {key} failed: {message}"
                            )));
                        }
                    }
                }
            }
        }
        if dirty {
            flush(spec, &outputs, &manifest)?;
        }
    }
    flush(spec, &outputs, &manifest)?;
    Ok(manifest)
}

fn run_rag_cell(
    spec: &RunSpec,
    env: &GridEnv,
    hs: &HateSpeechInstance,
    model_id: &str,
    hits: &[RetrievalResult],
) -> Result<CounterSpeech, CoreError> {
    if hits.len() < spec.k {
        return Err(CoreError::pipeline(format!(
            "retriever returned {} chunks, need {}; knowledge base too small",
            hits.len(),
            spec.k
        )));
    }
    let mut summaries = Vec::with_capacity(spec.k);
    for hit in hits {
        let chunk = env.chunks.get(&hit.chunk_id).ok_or_else(|| {
            CoreError::pipeline(format!("retrieved chunk {} missing from chunk store", hit.chunk_id))
        })?;
        let summary = summarize_evidence(env.chat, model_id, chunk).map_err(|e| {
            CoreError::pipeline(format!("summary of chunk {} failed: {e}", hit.chunk_id))
        })?;
        summaries.push(EvidenceSummary {
            hs_id: hs.hs_id.clone(),
            retriever: hit.retriever,
            model_id: model_id.to_string(),
            rank: hit.rank,
            chunk_id: hit.chunk_id.clone(),
            doc_id: hit.doc_id.clone(),
            summary,
        });
    }
    generate_cs(env.chat, model_id, hs, &summaries)
}

fn flush(
    spec: &RunSpec,
    outputs: &[CounterSpeech],
    manifest: &RunManifest,
) -> Result<(), CoreError> {
    let mut outputs: Vec<&CounterSpeech> = outputs.iter().collect();
    outputs.sort_by(|a, b| {
        (&a.hs_id, a.retriever, &a.model_id).cmp(&(&b.hs_id, b.retriever, &b.model_id))
    });

    let mut rows: Vec<&EvidenceSummary> = outputs.iter().flat_map(|cs| &cs.evidence).collect();
    rows.sort_by(|a, b| {
        (&a.hs_id, a.retriever, &a.model_id, a.rank).cmp(&(
            &b.hs_id,
            b.retriever,
            &b.model_id,
            b.rank,
        ))
    });
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["hs_id", "retriever", "model", "rank", "chunk_id", "doc_id", "summary"])
        .and_then(|_| {
            rows.iter().try_for_each(|s| {
                writer.write_record([
                    s.hs_id.as_str(),
                    s.retriever.as_str(),
                    s.model_id.as_str(),
                    &s.rank.to_string(),
                    s.chunk_id.as_str(),
                    s.doc_id.as_str(),
                    s.summary.as_str(),
                ])
            })
        })
        .map_err(|e| CoreError::csv(SUMMARIES_FILE, e))?;
    let csv_bytes = writer
        .into_inner()
        .map_err(|e| CoreError::validation(format!("summaries buffer: {e}")))?;
    write_atomic(&spec.output_dir.join(SUMMARIES_FILE), &csv_bytes)?;

    let mut jsonl = String::new();
    for cs in &outputs {
        let line = serde_json::to_string(cs).map_err(|e| CoreError::json(CS_FILE, e))?;
        jsonl.push_str(&line);
        jsonl.push('\n');
    }
    write_atomic(&spec.output_dir.join(CS_FILE), jsonl.as_bytes())?;

    let mut body = serde_json::to_string_pretty(manifest)
        .map_err(|e| CoreError::json(MANIFEST_FILE, e))?;
    body.push('\n');
    write_atomic(&spec.output_dir.join(MANIFEST_FILE), body.as_bytes())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CoreError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| CoreError::io(tmp.clone(), e))?;
    fs::rename(&tmp, path).map_err(|e| CoreError::io(path.to_path_buf(), e))
}

pub fn load_run_manifest(path: &Path) -> Result<RunManifest, CoreError> {
    let body = fs::read_to_string(path).map_err(|e| CoreError::io(path.to_path_buf(), e))?;
    serde_json::from_str(&body).map_err(|e| CoreError::json(path.display().to_string(), e))
}

pub fn load_counter_speech_jsonl(path: &Path) -> Result<Vec<CounterSpeech>, CoreError> {
    let body = fs::read_to_string(path).map_err(|e| CoreError::io(path.to_path_buf(), e))?;
    let mut out = Vec::new();
    for (i, line) in body.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cs: CounterSpeech = serde_json::from_str(line)
            .map_err(|e| CoreError::json(format!("{}:{}", path.display(), i + 1), e))?;
        out.push(cs);
    }
    Ok(out)
}

/// UTC timestamp in RFC 3339 form with millisecond precision.
fn rfc3339_utc(t: SystemTime) -> String {
    let since_epoch = t.duration_since(UNIX_EPOCH).unwrap_or(Duration::ZERO);
    let secs = since_epoch.as_secs();
    let millis = since_epoch.subsec_millis();
    let (year, month, day) = civil_from_days((secs / 86_400) as i64);
    let rem = secs % 86_400;
    format!(
        "{year:04}-{month:02}-{day:02}T{:02}:{:02}:{:02}.{millis:03}Z",
        rem / 3600,
        (rem % 3600) / 60,
        rem % 60
    )
}

/// Gregorian date for a day count since 1970-01-01.
fn civil_from_days(z: i64) -> (i64, u32, u32) {
    let z = z + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z.rem_euclid(146_097);
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let day = (doy - (153 * mp + 2) / 5 + 1) as u32;
    let month = if mp < 10 { mp + 3 } else { mp - 9 } as u32;
    let year = yoe + era * 400 + i64::from(month <= 2);
    (year, month, day)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TargetGroup;
    use crate::index::{Bm25Index, Bm25Params, VectorIndex};
    use crate::providers::{make_stub_providers, StubProviders};
    use std::collections::BTreeMap;

    fn kb_chunks() -> Vec<Chunk> {
        let texts = [
            "Migration statistics show net economic contribution over a decade.",
            "Public health studies report vaccination protects whole communities.",
            "Employment data indicate newcomers fill persistent labor shortages.",
            "Historical records document long traditions of religious tolerance.",
            "Crime figures demonstrate no link between migration and offending.",
        ];
        texts
            .iter()
            .enumerate()
            .map(|(i, text)| Chunk {
                chunk_id: format!("doc{i}#00000"),
                doc_id: format!("doc{i}"),
                ordinal: 0,
                text: text.to_string(),
                token_count: crate::text::count_tokens(text),
            })
            .collect()
    }

    fn hs_fixtures(n: usize) -> Vec<HateSpeechInstance> {
        (0..n)
            .map(|i| HateSpeechInstance {
                hs_id: format!("hs{i:03}"),
                text: format!("hateful claim number {i} about migration and crime"),
                target: TargetGroup::Migrants,
                reference_cs: None,
            })
            .collect()
    }

    struct Fixture {
        stubs: StubProviders,
        chunks: BTreeMap<String, Chunk>,
        bm25: Bm25Index,
        dense: VectorIndex,
    }

    impl Fixture {
        fn new(seed: u64) -> Self {
            let chunks = kb_chunks();
            let stubs = make_stub_providers(seed);
            let bm25 = Bm25Index::build(&chunks, Bm25Params::default()).unwrap();
            let dense = VectorIndex::build(&chunks, &stubs.embedding).unwrap();
            let chunks = chunks.into_iter().map(|c| (c.chunk_id.clone(), c)).collect();
            Fixture { stubs, chunks, bm25, dense }
        }

        fn retriever_set(&self) -> RetrieverSet<'_> {
            RetrieverSet::new()
                .with_bm25(self.bm25.clone())
                .with_dense_a(self.dense.clone(), &self.stubs.embedding)
        }
    }

    #[test]
    fn grid_produces_one_row_per_cell() {
        let fx = Fixture::new(11);
        let set = fx.retriever_set();
        let env = GridEnv { retrievers: &set, chunks: &fx.chunks, chat: &fx.stubs.chat };
        let dir = tempfile::tempdir().unwrap();
        let spec = RunSpec::new(
            vec![RetrieverId::Bm25, RetrieverId::DenseA, RetrieverId::None],
            vec!["model-x".into(), "model-y".into()],
            dir.path(),
            11,
        );
        let hs = hs_fixtures(2);
        let manifest = run_grid(&spec, &env, &hs).unwrap();
        assert_eq!(manifest.completed_cells(), 12);
        assert_eq!(manifest.failed_cells(), 0);

        let outputs = load_counter_speech_jsonl(&dir.path().join(CS_FILE)).unwrap();
        assert_eq!(outputs.len(), 12);
        for cs in &outputs {
            cs.validate().unwrap();
            let expected = if cs.retriever.is_rag() { 3 } else { 0 };
            assert_eq!(cs.evidence.len(), expected);
            for (i, ev) in cs.evidence.iter().enumerate() {
                assert_eq!(ev.rank, i + 1);
                assert!(fx.chunks.contains_key(&ev.chunk_id));
                assert_eq!(ev.retriever, cs.retriever);
            }
        }
        let summaries = fs::read_to_string(dir.path().join(SUMMARIES_FILE)).unwrap();
        assert!(summaries
            .starts_with("hs_id,retriever,model,rank,chunk_id,doc_id,summary"));
        assert_eq!(summaries.lines().count(), 1 + 2 * 2 * 2 * 3);
    }

    #[test]
    fn zero_instances_is_an_empty_success() {
        let fx = Fixture::new(3);
        let set = fx.retriever_set();
        let env = GridEnv { retrievers: &set, chunks: &fx.chunks, chat: &fx.stubs.chat };
        let dir = tempfile::tempdir().unwrap();
        let spec = RunSpec::new(vec![RetrieverId::None], vec!["m".into()], dir.path(), 3);
        let manifest = run_grid(&spec, &env, &[]).unwrap();
        assert!(manifest.cells.is_empty());
        assert_eq!(fs::read_to_string(dir.path().join(CS_FILE)).unwrap(), "");
    }

    #[test]
    fn rerun_is_a_no_op_and_keeps_bytes_identical() {
        let fx = Fixture::new(5);
        let set = fx.retriever_set();
        let env = GridEnv { retrievers: &set, chunks: &fx.chunks, chat: &fx.stubs.chat };
        let dir = tempfile::tempdir().unwrap();
        let spec = RunSpec::new(
            vec![RetrieverId::Bm25, RetrieverId::None],
            vec!["m1".into()],
            dir.path(),
            5,
        );
        let hs = hs_fixtures(3);
        run_grid(&spec, &env, &hs).unwrap();
        let cs_before = fs::read(dir.path().join(CS_FILE)).unwrap();
        let sum_before = fs::read(dir.path().join(SUMMARIES_FILE)).unwrap();
        run_grid(&spec, &env, &hs).unwrap();
        assert_eq!(fs::read(dir.path().join(CS_FILE)).unwrap(), cs_before);
        assert_eq!(fs::read(dir.path().join(SUMMARIES_FILE)).unwrap(), sum_before);
    }

    #[test]
    fn resume_after_partial_run_matches_fresh_run() {
        let fx = Fixture::new(9);
        let set = fx.retriever_set();
        let env = GridEnv { retrievers: &set, chunks: &fx.chunks, chat: &fx.stubs.chat };
        let retrievers = vec![RetrieverId::Bm25, RetrieverId::None];
        let models = vec!["m1".to_string(), "m2".to_string()];
        let hs = hs_fixtures(4);

        let full_dir = tempfile::tempdir().unwrap();
        let spec = RunSpec::new(retrievers.clone(), models.clone(), full_dir.path(), 9);
        run_grid(&spec, &env, &hs).unwrap();
        let want = fs::read(full_dir.path().join(CS_FILE)).unwrap();

        let resumed_dir = tempfile::tempdir().unwrap();
        let spec2 = RunSpec::new(retrievers, models, resumed_dir.path(), 9);
        run_grid(&spec2, &env, &hs[..2]).unwrap();
        run_grid(&spec2, &env, &hs).unwrap();
        assert_eq!(fs::read(resumed_dir.path().join(CS_FILE)).unwrap(), want);
    }

    #[test]
    fn resume_with_changed_parameters_is_refused() {
        let fx = Fixture::new(2);
        let set = fx.retriever_set();
        let env = GridEnv { retrievers: &set, chunks: &fx.chunks, chat: &fx.stubs.chat };
        let dir = tempfile::tempdir().unwrap();
        let spec = RunSpec::new(vec![RetrieverId::None], vec!["m1".into()], dir.path(), 2);
        run_grid(&spec, &env, &hs_fixtures(1)).unwrap();
        let other = RunSpec::new(vec![RetrieverId::None], vec!["m2".into()], dir.path(), 2);
        let err = run_grid(&other, &env, &hs_fixtures(1)).unwrap_err();
        assert!(matches!(err, CoreError::Incompatible(_)));
    }

    #[test]
    fn missing_index_is_rejected_up_front() {
        let fx = Fixture::new(2);
        let set = RetrieverSet::new();
        let env = GridEnv { retrievers: &set, chunks: &fx.chunks, chat: &fx.stubs.chat };
        let dir = tempfile::tempdir().unwrap();
        let spec = RunSpec::new(vec![RetrieverId::Bm25], vec!["m".into()], dir.path(), 2);
        let err = run_grid(&spec, &env, &hs_fixtures(1)).unwrap_err();
        assert!(matches!(err, CoreError::Config(_)));
    }

    #[test]
    fn failing_chat_fails_fast_and_records_the_cell() {
        struct FailingChat;
        impl ChatProvider for FailingChat {
            fn chat(&self, _request: &ChatRequest) -> Result<String, CoreError> {
                Err(CoreError::provider(
                    crate::error::ProviderErrorKind::Exhausted,
                    "simulated outage",
                ))
            }
        }
        let fx = Fixture::new(2);
        let set = fx.retriever_set();
        let chat = FailingChat;
        let env = GridEnv { retrievers: &set, chunks: &fx.chunks, chat: &chat };
        let dir = tempfile::tempdir().unwrap();
        let spec = RunSpec::new(vec![RetrieverId::None], vec!["m".into()], dir.path(), 2);
        let err = run_grid(&spec, &env, &hs_fixtures(1)).unwrap_err();
        assert!(matches!(err, CoreError::Pipeline(_)));
        let manifest = load_run_manifest(&dir.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(manifest.failed_cells(), 1);
        let cell = manifest.cells.values().next().unwrap();
        assert!(cell.error.as_deref().unwrap().contains("simulated outage"));
    }

    #[test]
    fn keep_going_records_failures_and_continues() {
        struct FlakyChat {
            calls: std::sync::Mutex<u32>,
        }
        impl ChatProvider for FlakyChat {
            fn chat(&self, request: &ChatRequest) -> Result<String, CoreError> {
                let mut calls = self.calls.lock().unwrap();
                *calls += 1;
                if request.model_id == "bad" {
                    Err(CoreError::provider(
                        crate::error::ProviderErrorKind::Exhausted,
                        "down",
                    ))
                } else {
                    Ok("One sentence. Two sentence.".to_string())
                }
            }
        }
        let fx = Fixture::new(2);
        let set = fx.retriever_set();
        let chat = FlakyChat { calls: std::sync::Mutex::new(0) };
        let env = GridEnv { retrievers: &set, chunks: &fx.chunks, chat: &chat };
        let dir = tempfile::tempdir().unwrap();
        let mut spec =
            RunSpec::new(vec![RetrieverId::None], vec!["bad".into(), "good".into()], dir.path(), 2);
        spec.policy = FailurePolicy::KeepGoing;
        let manifest = run_grid(&spec, &env, &hs_fixtures(2)).unwrap();
        assert_eq!(manifest.failed_cells(), 2);
        assert_eq!(manifest.completed_cells(), 2);
        let outputs = load_counter_speech_jsonl(&dir.path().join(CS_FILE)).unwrap();
        assert_eq!(outputs.len(), 2);
        assert!(outputs.iter().all(|cs| cs.model_id == "good"));
    }

    #[test]
    fn timestamps_render_rfc3339() {
        assert_eq!(rfc3339_utc(UNIX_EPOCH), "1970-01-01T00:00:00.000Z");
        let t = UNIX_EPOCH + Duration::from_secs(1_000_000_000);
        assert_eq!(rfc3339_utc(t), "2001-09-09T01:46:40.000Z");
        let leap_day = UNIX_EPOCH + Duration::from_secs(951_782_400);
        assert_eq!(rfc3339_utc(leap_day), "2000-02-29T00:00:00.000Z");
    }
}
