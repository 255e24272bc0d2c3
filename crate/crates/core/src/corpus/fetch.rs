//! Crawler for paginated document portals.
//!
//! The portals in scope expose a JSON listing endpoint: a GET with
//! configurable query parameters returns `{"results": [...], "has_more":
//! bool}` where each result carries at least a document `url`. Documents are
//! fetched, normalized into knowledge-base records, and written under
//! `out_dir/{TARGET}/{id}.json`, with a manifest CSV covering everything
//! fetched so far. Reruns skip anything already in the manifest, so a
//! completed crawl is a no-op the second time.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fs;
use std::path::Path;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::corpus::loader::{read_manifest_csv, write_manifest_csv};
use crate::corpus::{Document, DocumentMeta, RejectRecord, TargetGroup};
use crate::error::{CoreError, ProviderErrorKind};
use crate::text;

/// One portal to crawl. Query parameter names vary between portals, so they
/// are all configurable; the listing response shape is fixed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrawlSource {
    /// Manifest `source` value, e.g. "UN" or "EURLEX".
    pub name: String,
    /// Listing endpoint, queried with the parameters below.
    pub base_url: String,
    #[serde(default = "default_query_param")]
    pub query_param: String,
    #[serde(default = "default_type_param")]
    pub type_param: String,
    #[serde(default = "default_year_from_param")]
    pub year_from_param: String,
    #[serde(default = "default_year_to_param")]
    pub year_to_param: String,
    #[serde(default = "default_page_param")]
    pub page_param: String,
    #[serde(default = "default_page_start")]
    pub page_start: u32,
    /// Safety valve against runaway pagination.
    #[serde(default = "default_max_pages")]
    pub max_pages: u32,
}

fn default_query_param() -> String {
    "q".into()
}
fn default_type_param() -> String {
    "type".into()
}
fn default_year_from_param() -> String {
    "year_from".into()
}
fn default_year_to_param() -> String {
    "year_to".into()
}
fn default_page_param() -> String {
    "page".into()
}
fn default_page_start() -> u32 {
    1
}
fn default_max_pages() -> u32 {
    50
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrawlSpec {
    pub sources: Vec<CrawlSource>,
    /// Search keywords per target group; groups without keywords are skipped.
    pub keywords: BTreeMap<TargetGroup, Vec<String>>,
    /// Document types requested from each portal (one listing pass per type).
    /// Empty means one pass with no type filter.
    #[serde(default)]
    pub doc_types: Vec<String>,
    /// Inclusive publication-year filter, also enforced on responses.
    pub year_range: (i32, i32),
    #[serde(default = "default_delay_ms")]
    pub delay_ms: u64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
}

fn default_delay_ms() -> u64 {
    1000
}
fn default_max_retries() -> u32 {
    3
}
fn default_parallelism() -> usize {
    4
}
fn default_timeout_secs() -> u64 {
    30
}

impl CrawlSpec {
    pub fn validate(&self) -> Result<(), CoreError> {
        if self.sources.is_empty() {
            return Err(CoreError::config("crawl: no sources configured"));
        }
        for s in &self.sources {
            if s.base_url.trim().is_empty() {
                return Err(CoreError::config(format!("crawl source {}: empty base_url", s.name)));
            }
        }
        if self.year_range.0 > self.year_range.1 {
            return Err(CoreError::config(format!(
                "crawl: year range {}..{} is inverted",
                self.year_range.0, self.year_range.1
            )));
        }
        if self.parallelism == 0 {
            return Err(CoreError::config("crawl: parallelism must be at least 1"));
        }
        Ok(())
    }
}

/// One entry of a listing page.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ListingItem {
    pub url: String,
    #[serde(default)]
    pub id: Option<String>,
    #[serde(default)]
    pub fname: Option<String>,
    #[serde(default, rename = "type")]
    pub doc_type: Option<String>,
    #[serde(default)]
    pub year: Option<i32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ListingPage {
    pub results: Vec<ListingItem>,
    #[serde(default)]
    pub has_more: bool,
}

/// What a crawl did: the merged manifest, how much was new, and everything
/// that failed validation or exhausted its retries.
#[derive(Debug)]
pub struct FetchOutcome {
    pub manifest: Vec<DocumentMeta>,
    pub new_documents: usize,
    pub skipped_duplicates: usize,
    pub errors: Vec<RejectRecord>,
}

struct FetchJob {
    source: String,
    target: TargetGroup,
    doc_type: String,
    item: ListingItem,
}

/// Shared crawl state guarded per concern so workers contend as little as
/// possible.
struct CrawlState {
    claimed_urls: Mutex<BTreeSet<String>>,
    claimed_ids: Mutex<BTreeSet<String>>,
    manifest_rows: Mutex<Vec<DocumentMeta>>,
    errors: Mutex<Vec<RejectRecord>>,
    skipped: Mutex<usize>,
    last_hit: Mutex<HashMap<String, Instant>>,
}

/// Crawl every configured (source, target, keyword) combination and
/// materialize documents under `out_dir`. The manifest CSV at
/// `out_dir/manifest.csv` is merged with any previous run and rewritten
/// atomically, sorted by (target, id), so repeated runs converge.
pub fn fetch_documents(spec: &CrawlSpec, out_dir: &Path) -> Result<FetchOutcome, CoreError> {
    spec.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| CoreError::io(out_dir, e))?;

    let manifest_path = out_dir.join("manifest.csv");
    let existing: Vec<DocumentMeta> =
        if manifest_path.exists() { read_manifest_csv(&manifest_path)? } else { Vec::new() };

    let state = CrawlState {
        claimed_urls: Mutex::new(existing.iter().map(|m| m.url.clone()).collect()),
        claimed_ids: Mutex::new(existing.iter().map(|m| m.id.clone()).collect()),
        manifest_rows: Mutex::new(existing),
        errors: Mutex::new(Vec::new()),
        skipped: Mutex::new(0),
        last_hit: Mutex::new(HashMap::new()),
    };

    let client = reqwest::blocking::Client::builder()
        .timeout(Duration::from_secs(spec.timeout_secs))
        .build()
        .map_err(|e| CoreError::provider(ProviderErrorKind::Rejected, e.to_string()))?;

    // Listing passes are sequential (they are few and paginated); document
    // fetches fan out to workers.
    let mut jobs: VecDeque<FetchJob> = VecDeque::new();
    let type_passes: Vec<Option<&str>> = if spec.doc_types.is_empty() {
        vec![None]
    } else {
        spec.doc_types.iter().map(|t| Some(t.as_str())).collect()
    };
    for source in &spec.sources {
        for (&target, keywords) in &spec.keywords {
            for keyword in keywords {
                for doc_type in &type_passes {
                    match list_all_pages(&client, spec, source, keyword, *doc_type, &state) {
                        Ok(items) => {
                            for item in items {
                                jobs.push_back(FetchJob {
                                    source: source.name.clone(),
                                    target,
                                    doc_type: item
                                        .doc_type
                                        .clone()
                                        .or_else(|| doc_type.map(str::to_string))
                                        .unwrap_or_else(|| "UNKNOWN".into()),
                                    item,
                                });
                            }
                        }
                        Err(e) => state.errors.lock().unwrap().push(RejectRecord {
                            location: format!("{} q={keyword}", source.base_url),
                            reason: e.to_string(),
                        }),
                    }
                }
            }
        }
    }

    let queue = Mutex::new(jobs);
    let new_count = Mutex::new(0usize);
    std::thread::scope(|scope| {
        for _ in 0..spec.parallelism {
            scope.spawn(|| loop {
                let job = match queue.lock().unwrap().pop_front() {
                    Some(j) => j,
                    None => break,
                };
                match process_job(&client, spec, &job, out_dir, &state) {
                    Ok(true) => *new_count.lock().unwrap() += 1,
                    Ok(false) => {}
                    Err(e) => state.errors.lock().unwrap().push(RejectRecord {
                        location: job.item.url.clone(),
                        reason: e.to_string(),
                    }),
                }
            });
        }
    });

    let manifest_rows = state.manifest_rows.into_inner().unwrap();
    write_manifest_atomic(&manifest_rows, &manifest_path)?;
    Ok(FetchOutcome {
        manifest: manifest_rows,
        new_documents: new_count.into_inner().unwrap(),
        skipped_duplicates: state.skipped.into_inner().unwrap(),
        errors: state.errors.into_inner().unwrap(),
    })
}

fn list_all_pages(
    client: &reqwest::blocking::Client,
    spec: &CrawlSpec,
    source: &CrawlSource,
    keyword: &str,
    doc_type: Option<&str>,
    state: &CrawlState,
) -> Result<Vec<ListingItem>, CoreError> {
    let mut items = Vec::new();
    for page in source.page_start..source.page_start + source.max_pages {
        let mut params: Vec<(String, String)> = vec![
            (source.query_param.clone(), keyword.to_string()),
            (source.page_param.clone(), page.to_string()),
            (source.year_from_param.clone(), spec.year_range.0.to_string()),
            (source.year_to_param.clone(), spec.year_range.1.to_string()),
        ];
        if let Some(t) = doc_type {
            params.push((source.type_param.clone(), t.to_string()));
        }
        let body = get_with_retry(client, spec, &source.base_url, &params, state)?;
        let parsed: ListingPage = serde_json::from_str(&body)
            .map_err(|e| CoreError::json(format!("listing page {page}"), e))?;
        let done = !parsed.has_more || parsed.results.is_empty();
        items.extend(parsed.results);
        if done {
            break;
        }
    }
    Ok(items)
}

/// Returns Ok(true) when a new document was written, Ok(false) for a
/// duplicate.
fn process_job(
    client: &reqwest::blocking::Client,
    spec: &CrawlSpec,
    job: &FetchJob,
    out_dir: &Path,
    state: &CrawlState,
) -> Result<bool, CoreError> {
    {
        let mut urls = state.claimed_urls.lock().unwrap();
        if !urls.insert(job.item.url.clone()) {
            *state.skipped.lock().unwrap() += 1;
            return Ok(false);
        }
    }

    let body = get_with_retry(client, spec, &job.item.url, &[], state)?;
    let (doc_text, body_meta) = extract_document(&body);

    let id = match job.item.id.clone().or_else(|| body_meta.id.clone()) {
        Some(id) if !id.trim().is_empty() => id,
        _ => format!("doc-{}", &crate::hashing::sha256_hex(&job.item.url)[..16]),
    };
    {
        let mut ids = state.claimed_ids.lock().unwrap();
        if !ids.insert(id.clone()) {
            *state.skipped.lock().unwrap() += 1;
            return Ok(false);
        }
    }

    let year = job.item.year.or(body_meta.year).ok_or_else(|| {
        CoreError::validation(format!("document {id}: no publication year in listing or body"))
    })?;
    let fname = job
        .item
        .fname
        .clone()
        .or(body_meta.fname)
        .unwrap_or_else(|| format!("{id}.json"));

    let doc = Document {
        meta: DocumentMeta {
            id: id.clone(),
            fname,
            target: job.target,
            doc_type: body_meta.doc_type.unwrap_or_else(|| job.doc_type.clone()),
            year,
            url: job.item.url.clone(),
            source: job.source.clone(),
        },
        text: text::normalize_text(&doc_text),
    };
    doc.meta.validate(spec.year_range)?;
    if doc.text.trim().is_empty() {
        return Err(CoreError::validation(format!("document {id}: fetched text is empty")));
    }

    let dir = out_dir.join(doc.meta.target.as_str());
    fs::create_dir_all(&dir).map_err(|e| CoreError::io(&dir, e))?;
    let path = dir.join(format!("{id}.json"));
    let json = serde_json::to_string_pretty(&doc)
        .map_err(|e| CoreError::json("document record", e))?;
    fs::write(&path, json).map_err(|e| CoreError::io(&path, e))?;

    state.manifest_rows.lock().unwrap().push(doc.meta);
    Ok(true)
}

#[derive(Default)]
struct BodyMeta {
    id: Option<String>,
    fname: Option<String>,
    doc_type: Option<String>,
    year: Option<i32>,
}

/// A document endpoint may return either a JSON object with a `text` field
/// (plus optional metadata) or raw text.
fn extract_document(body: &str) -> (String, BodyMeta) {
    if let Ok(serde_json::Value::Object(map)) = serde_json::from_str(body) {
        if let Some(text) = map.get("text").and_then(|v| v.as_str()) {
            let meta = BodyMeta {
                id: map.get("id").and_then(|v| v.as_str()).map(str::to_string),
                fname: map.get("fname").and_then(|v| v.as_str()).map(str::to_string),
                doc_type: map.get("type").and_then(|v| v.as_str()).map(str::to_string),
                year: map.get("year").and_then(|v| v.as_i64()).map(|y| y as i32),
            };
            return (text.to_string(), meta);
        }
    }
    (body.to_string(), BodyMeta::default())
}

fn get_with_retry(
    client: &reqwest::blocking::Client,
    spec: &CrawlSpec,
    url: &str,
    params: &[(String, String)],
    state: &CrawlState,
) -> Result<String, CoreError> {
    let mut target = reqwest::Url::parse(url)
        .map_err(|e| CoreError::config(format!("invalid url {url}: {e}")))?;
    if !params.is_empty() {
        target
            .query_pairs_mut()
            .extend_pairs(params.iter().map(|(k, v)| (k.as_str(), v.as_str())));
    }
    let mut last_err = String::new();
    for attempt in 0..=spec.max_retries {
        if attempt > 0 {
            let backoff = Duration::from_millis(spec.delay_ms.max(1) << (attempt - 1));
            std::thread::sleep(backoff);
        }
        politeness_wait(url, spec.delay_ms, state);
        let result = client.get(target.clone()).send();
        match result {
            Ok(resp) => {
                let status = resp.status();
                if status.is_success() {
                    return resp.text().map_err(|e| {
                        CoreError::provider(ProviderErrorKind::Malformed, e.to_string())
                    });
                }
                last_err = format!("{url}: HTTP {status}");
                if !(status.as_u16() == 429 || status.is_server_error()) {
                    return Err(CoreError::provider(ProviderErrorKind::Rejected, last_err));
                }
            }
            Err(e) => last_err = format!("{url}: {e}"),
        }
        log::warn!("fetch attempt {} failed: {last_err}", attempt + 1);
    }
    Err(CoreError::provider(
        ProviderErrorKind::Exhausted,
        format!("{last_err} (after {} attempts)", spec.max_retries + 1),
    ))
}

/// Enforce `delay_ms` between consecutive requests to the same host.
fn politeness_wait(url: &str, delay_ms: u64, state: &CrawlState) {
    let host = url.split("://").nth(1).and_then(|r| r.split('/').next()).unwrap_or(url).to_string();
    loop {
        let wait = {
            let mut last = state.last_hit.lock().unwrap();
            let now = Instant::now();
            match last.get(&host) {
                Some(&t) if now.duration_since(t) < Duration::from_millis(delay_ms) => {
                    Duration::from_millis(delay_ms) - now.duration_since(t)
                }
                _ => {
                    last.insert(host.clone(), now);
                    return;
                }
            }
        };
        std::thread::sleep(wait);
    }
}

fn write_manifest_atomic(rows: &[DocumentMeta], path: &Path) -> Result<(), CoreError> {
    let tmp = path.with_extension("csv.tmp");
    write_manifest_csv(rows, &tmp)?;
    fs::rename(&tmp, path).map_err(|e| CoreError::io(path, e))
}
