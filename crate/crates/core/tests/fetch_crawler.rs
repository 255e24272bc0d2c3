//! Crawler tests against a scripted local portal: pagination, dedup,
//! retries, validation rejects, and manifest convergence across reruns.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::{Arc, Mutex};

use common::{HttpRequest, HttpResponse, TestServer};
use csrag_core::corpus::{
    fetch_documents, read_manifest_csv, CrawlSource, CrawlSpec, Document, TargetGroup,
};
use serde_json::json;
use tempfile::TempDir;

fn portal_source(base_url: &str) -> CrawlSource {
    CrawlSource {
        name: "UN".into(),
        base_url: format!("{base_url}/search"),
        query_param: "q".into(),
        type_param: "type".into(),
        year_from_param: "year_from".into(),
        year_to_param: "year_to".into(),
        page_param: "page".into(),
        page_start: 1,
        max_pages: 50,
    }
}

fn crawl_spec(base_url: &str, keywords: BTreeMap<TargetGroup, Vec<String>>) -> CrawlSpec {
    CrawlSpec {
        sources: vec![portal_source(base_url)],
        keywords,
        doc_types: Vec::new(),
        year_range: (2000, 2025),
        delay_ms: 1,
        max_retries: 3,
        parallelism: 2,
        timeout_secs: 5,
    }
}

fn migrant_keywords(words: &[&str]) -> BTreeMap<TargetGroup, Vec<String>> {
    let mut keywords = BTreeMap::new();
    keywords.insert(TargetGroup::Migrants, words.iter().map(|w| w.to_string()).collect());
    keywords
}

fn listing(results: serde_json::Value, has_more: bool) -> HttpResponse {
    HttpResponse::json(200, json!({ "results": results, "has_more": has_more }).to_string())
}

fn read_doc(out_dir: &Path, target: TargetGroup, id: &str) -> Document {
    let path = out_dir.join(target.as_str()).join(format!("{id}.json"));
    let raw = fs::read_to_string(&path).unwrap_or_else(|e| panic!("read {path:?}: {e}"));
    serde_json::from_str(&raw).unwrap()
}

/// Requests recorded by the handler, for asserting on query parameters.
type RequestLog = Arc<Mutex<Vec<HttpRequest>>>;

#[test]
fn paginated_listings_fetch_documents_into_target_directories() {
    let log: RequestLog = Arc::new(Mutex::new(Vec::new()));
    let handler_log = Arc::clone(&log);
    let base: Arc<Mutex<String>> = Arc::new(Mutex::new(String::new()));
    let handler_base = Arc::clone(&base);
    let server = TestServer::start(move |req| {
        handler_log.lock().unwrap().push(req.clone());
        let base = handler_base.lock().unwrap().clone();
        match req.path_only() {
            "/search" => match req.query_param("page").as_deref() {
                Some("1") => listing(
                    json!([
                        { "url": format!("{base}/docs/a"), "id": "doc-a", "year": 2015 },
                        { "url": format!("{base}/docs/b") },
                    ]),
                    true,
                ),
                _ => listing(json!([{ "url": format!("{base}/docs/c"), "id": "doc-c" }]), false),
            },
            "/docs/a" => HttpResponse::text(200, "Alpha paragraph."),
            "/docs/b" => HttpResponse::json(
                200,
                json!({
                    "id": "doc-b",
                    "text": "Beta text.\r\nMore beta.",
                    "year": 2018,
                    "type": "REPORT",
                    "fname": "beta.pdf",
                })
                .to_string(),
            ),
            "/docs/c" => {
                HttpResponse::json(200, json!({ "text": "Gamma text.", "year": 2020 }).to_string())
            }
            other => HttpResponse::text(404, format!("no route {other}")),
        }
    });
    *base.lock().unwrap() = server.base_url.clone();

    let out = TempDir::new().unwrap();
    let spec = crawl_spec(&server.base_url, migrant_keywords(&["migration"]));
    let outcome = fetch_documents(&spec, out.path()).unwrap();

    assert_eq!(outcome.new_documents, 3);
    assert_eq!(outcome.skipped_duplicates, 0);
    assert!(outcome.errors.is_empty(), "unexpected errors: {:?}", outcome.errors);

    let mut ids: Vec<&str> = outcome.manifest.iter().map(|m| m.id.as_str()).collect();
    ids.sort_unstable();
    assert_eq!(ids, ["doc-a", "doc-b", "doc-c"]);
    assert!(outcome.manifest.iter().all(|m| m.target == TargetGroup::Migrants));
    assert!(outcome.manifest.iter().all(|m| m.source == "UN"));

    let a = read_doc(out.path(), TargetGroup::Migrants, "doc-a");
    assert_eq!(a.text, "Alpha paragraph.");
    assert_eq!(a.meta.year, 2015);
    assert_eq!(a.meta.fname, "doc-a.json");
    assert_eq!(a.meta.doc_type, "UNKNOWN");
    assert_eq!(a.meta.url, format!("{}/docs/a", server.base_url));

    let b = read_doc(out.path(), TargetGroup::Migrants, "doc-b");
    assert_eq!(b.text, "Beta text.\nMore beta.", "CRLF is normalized on ingest");
    assert_eq!(b.meta.year, 2018);
    assert_eq!(b.meta.fname, "beta.pdf");
    assert_eq!(b.meta.doc_type, "REPORT");

    let c = read_doc(out.path(), TargetGroup::Migrants, "doc-c");
    assert_eq!(c.meta.year, 2020);

    let raw_b = fs::read_to_string(
        out.path().join("MIGRANTS").join("doc-b.json"),
    )
    .unwrap();
    assert!(raw_b.starts_with("{\n"), "documents are written pretty-printed");

    let manifest_csv = read_manifest_csv(&out.path().join("manifest.csv")).unwrap();
    let csv_ids: Vec<&str> = manifest_csv.iter().map(|m| m.id.as_str()).collect();
    assert_eq!(csv_ids, ["doc-a", "doc-b", "doc-c"], "csv rows sorted by (target, id)");
    let mut returned = outcome.manifest.clone();
    returned.sort_by(|a, b| (a.target, &a.id).cmp(&(b.target, &b.id)));
    assert_eq!(manifest_csv, returned);

    let log = log.lock().unwrap();
    let listings: Vec<&HttpRequest> =
        log.iter().filter(|r| r.path_only() == "/search").collect();
    assert_eq!(listings.len(), 2, "stops once has_more is false");
    assert_eq!(
        listings[0].query_params(),
        [
            ("q".to_string(), "migration".to_string()),
            ("page".to_string(), "1".to_string()),
            ("year_from".to_string(), "2000".to_string()),
            ("year_to".to_string(), "2025".to_string()),
        ]
    );
    assert_eq!(listings[1].query_param("page").as_deref(), Some("2"));
}

#[test]
fn rerunning_a_finished_crawl_fetches_nothing_new() {
    let doc_hits = Arc::new(Mutex::new(0usize));
    let handler_hits = Arc::clone(&doc_hits);
    let base: Arc<Mutex<String>> = Arc::new(Mutex::new(String::new()));
    let handler_base = Arc::clone(&base);
    let server = TestServer::start(move |req| {
        let base = handler_base.lock().unwrap().clone();
        match req.path_only() {
            "/search" => listing(
                json!([
                    { "url": format!("{base}/docs/x"), "id": "doc-x", "year": 2010 },
                    { "url": format!("{base}/docs/y"), "id": "doc-y", "year": 2011 },
                ]),
                false,
            ),
            path if path.starts_with("/docs/") => {
                *handler_hits.lock().unwrap() += 1;
                HttpResponse::text(200, format!("Body of {path}."))
            }
            other => HttpResponse::text(404, format!("no route {other}")),
        }
    });
    *base.lock().unwrap() = server.base_url.clone();

    let out = TempDir::new().unwrap();
    let spec = crawl_spec(&server.base_url, migrant_keywords(&["asylum"]));

    let first = fetch_documents(&spec, out.path()).unwrap();
    assert_eq!(first.new_documents, 2);
    assert_eq!(*doc_hits.lock().unwrap(), 2);
    let manifest_bytes = fs::read(out.path().join("manifest.csv")).unwrap();

    let second = fetch_documents(&spec, out.path()).unwrap();
    assert_eq!(second.new_documents, 0);
    assert_eq!(second.skipped_duplicates, 2);
    assert!(second.errors.is_empty());
    assert_eq!(*doc_hits.lock().unwrap(), 2, "known urls are skipped before any request");
    assert_eq!(
        fs::read(out.path().join("manifest.csv")).unwrap(),
        manifest_bytes,
        "rerun leaves the manifest byte-identical"
    );
    let sorted = |mut rows: Vec<csrag_core::corpus::DocumentMeta>| {
        rows.sort_by(|a, b| (a.target, &a.id).cmp(&(b.target, &b.id)));
        rows
    };
    assert_eq!(sorted(second.manifest), sorted(first.manifest));
}

#[test]
fn duplicate_urls_and_duplicate_ids_are_each_fetched_once() {
    let base: Arc<Mutex<String>> = Arc::new(Mutex::new(String::new()));
    let handler_base = Arc::clone(&base);
    let doc_hits = Arc::new(Mutex::new(0usize));
    let handler_hits = Arc::clone(&doc_hits);
    let server = TestServer::start(move |req| {
        let base = handler_base.lock().unwrap().clone();
        match (req.path_only(), req.query_param("q").as_deref()) {
            ("/search", Some("alpha")) => listing(
                json!([{ "url": format!("{base}/docs/shared"), "year": 2010 }]),
                false,
            ),
            ("/search", Some("beta")) => listing(
                json!([
                    { "url": format!("{base}/docs/shared"), "year": 2010 },
                    { "url": format!("{base}/docs/mirror") },
                ]),
                false,
            ),
            ("/docs/shared", _) => {
                *handler_hits.lock().unwrap() += 1;
                HttpResponse::json(
                    200,
                    json!({ "id": "doc-shared", "text": "Shared body.", "year": 2010 })
                        .to_string(),
                )
            }
            ("/docs/mirror", _) => {
                *handler_hits.lock().unwrap() += 1;
                HttpResponse::json(
                    200,
                    json!({ "id": "doc-shared", "text": "Mirror body.", "year": 2011 })
                        .to_string(),
                )
            }
            (other, _) => HttpResponse::text(404, format!("no route {other}")),
        }
    });
    *base.lock().unwrap() = server.base_url.clone();

    let out = TempDir::new().unwrap();
    let mut spec = crawl_spec(&server.base_url, migrant_keywords(&["alpha", "beta"]));
    spec.parallelism = 1;
    let outcome = fetch_documents(&spec, out.path()).unwrap();

    assert_eq!(outcome.new_documents, 1);
    assert_eq!(outcome.skipped_duplicates, 2, "one repeated url, one repeated id");
    assert!(outcome.errors.is_empty(), "unexpected errors: {:?}", outcome.errors);
    assert_eq!(*doc_hits.lock().unwrap(), 2, "the repeated url is never re-fetched");

    assert_eq!(outcome.manifest.len(), 1);
    let doc = read_doc(out.path(), TargetGroup::Migrants, "doc-shared");
    assert_eq!(doc.text, "Shared body.");
    assert_eq!(doc.meta.url, format!("{}/docs/shared", server.base_url));
}

#[test]
fn transient_server_errors_are_retried_and_persistent_ones_reported() {
    let counters: Arc<Mutex<BTreeMap<String, usize>>> = Arc::new(Mutex::new(BTreeMap::new()));
    let handler_counters = Arc::clone(&counters);
    let base: Arc<Mutex<String>> = Arc::new(Mutex::new(String::new()));
    let handler_base = Arc::clone(&base);
    let server = TestServer::start(move |req| {
        let base = handler_base.lock().unwrap().clone();
        let path = req.path_only().to_string();
        let attempt = {
            let mut counters = handler_counters.lock().unwrap();
            let slot = counters.entry(path.clone()).or_insert(0);
            *slot += 1;
            *slot
        };
        match path.as_str() {
            "/search" => listing(
                json!([
                    { "url": format!("{base}/docs/flaky"), "id": "doc-flaky", "year": 2012 },
                    { "url": format!("{base}/docs/broken"), "id": "doc-broken", "year": 2013 },
                ]),
                false,
            ),
            "/docs/flaky" if attempt == 1 => HttpResponse::text(500, "boom"),
            "/docs/flaky" => HttpResponse::text(200, "Recovered body."),
            "/docs/broken" => HttpResponse::text(500, "still broken"),
            other => HttpResponse::text(404, format!("no route {other}")),
        }
    });
    *base.lock().unwrap() = server.base_url.clone();

    let out = TempDir::new().unwrap();
    let mut spec = crawl_spec(&server.base_url, migrant_keywords(&["storm"]));
    spec.max_retries = 1;
    let outcome = fetch_documents(&spec, out.path()).unwrap();

    assert_eq!(outcome.new_documents, 1);
    let flaky = read_doc(out.path(), TargetGroup::Migrants, "doc-flaky");
    assert_eq!(flaky.text, "Recovered body.");

    assert_eq!(outcome.errors.len(), 1);
    let err = &outcome.errors[0];
    assert_eq!(err.location, format!("{}/docs/broken", server.base_url));
    assert!(err.reason.contains("HTTP 500"), "reason was {:?}", err.reason);
    assert!(err.reason.contains("(after 2 attempts)"), "reason was {:?}", err.reason);

    let counters = counters.lock().unwrap();
    assert_eq!(counters["/docs/flaky"], 2, "one failure, one successful retry");
    assert_eq!(counters["/docs/broken"], 2, "gives up after max_retries + 1 attempts");

    assert_eq!(outcome.manifest.len(), 1);
    assert!(!out.path().join("MIGRANTS").join("doc-broken.json").exists());
}

#[test]
fn documents_without_a_valid_publication_year_are_rejected() {
    let base: Arc<Mutex<String>> = Arc::new(Mutex::new(String::new()));
    let handler_base = Arc::clone(&base);
    let server = TestServer::start(move |req| {
        let base = handler_base.lock().unwrap().clone();
        match req.path_only() {
            "/search" => listing(
                json!([
                    { "url": format!("{base}/docs/noyear"), "id": "doc-noyear" },
                    { "url": format!("{base}/docs/oldyear"), "id": "doc-old", "year": 1990 },
                ]),
                false,
            ),
            "/docs/noyear" => HttpResponse::json(
                200,
                json!({ "text": "Missing its year." }).to_string(),
            ),
            "/docs/oldyear" => HttpResponse::json(
                200,
                json!({ "text": "Too old." }).to_string(),
            ),
            other => HttpResponse::text(404, format!("no route {other}")),
        }
    });
    *base.lock().unwrap() = server.base_url.clone();

    let out = TempDir::new().unwrap();
    let spec = crawl_spec(&server.base_url, migrant_keywords(&["year"]));
    let outcome = fetch_documents(&spec, out.path()).unwrap();

    assert_eq!(outcome.new_documents, 0);
    assert!(outcome.manifest.is_empty());
    assert_eq!(outcome.errors.len(), 2);

    let by_location = |suffix: &str| {
        outcome
            .errors
            .iter()
            .find(|e| e.location.ends_with(suffix))
            .unwrap_or_else(|| panic!("no reject for {suffix}: {:?}", outcome.errors))
    };
    let noyear = by_location("/docs/noyear");
    assert!(noyear.reason.contains("no publication year"), "reason was {:?}", noyear.reason);
    let oldyear = by_location("/docs/oldyear");
    assert!(
        oldyear.reason.contains("year 1990 outside [2000, 2025]"),
        "reason was {:?}",
        oldyear.reason
    );
    assert!(!out.path().join("MIGRANTS").exists(), "nothing valid was written");
}

#[test]
fn malformed_listing_pages_are_reported_without_aborting_the_crawl() {
    let base: Arc<Mutex<String>> = Arc::new(Mutex::new(String::new()));
    let handler_base = Arc::clone(&base);
    let server = TestServer::start(move |req| {
        let base = handler_base.lock().unwrap().clone();
        match (req.path_only(), req.query_param("q").as_deref()) {
            ("/search", Some("bad")) => HttpResponse::text(200, "this is not a listing"),
            ("/search", Some("good")) => listing(
                json!([{ "url": format!("{base}/docs/ok"), "id": "doc-ok", "year": 2016 }]),
                false,
            ),
            ("/docs/ok", _) => HttpResponse::text(200, "Still crawled."),
            (other, _) => HttpResponse::text(404, format!("no route {other}")),
        }
    });
    *base.lock().unwrap() = server.base_url.clone();

    let out = TempDir::new().unwrap();
    let mut keywords = BTreeMap::new();
    keywords.insert(TargetGroup::Women, vec!["bad".to_string()]);
    keywords.insert(TargetGroup::Migrants, vec!["good".to_string()]);
    let spec = crawl_spec(&server.base_url, keywords);
    let outcome = fetch_documents(&spec, out.path()).unwrap();

    assert_eq!(outcome.new_documents, 1, "the healthy keyword still completes");
    assert_eq!(outcome.manifest[0].id, "doc-ok");
    assert_eq!(outcome.manifest[0].target, TargetGroup::Migrants);

    assert_eq!(outcome.errors.len(), 1);
    let err = &outcome.errors[0];
    assert_eq!(err.location, format!("{}/search q=bad", server.base_url));
    assert!(err.reason.contains("listing page 1"), "reason was {:?}", err.reason);
}

#[test]
fn documents_without_any_id_get_a_stable_url_hash_id() {
    let base: Arc<Mutex<String>> = Arc::new(Mutex::new(String::new()));
    let handler_base = Arc::clone(&base);
    let server = TestServer::start(move |req| {
        let base = handler_base.lock().unwrap().clone();
        match req.path_only() {
            "/search" => listing(json!([{ "url": format!("{base}/docs/anon") }]), false),
            "/docs/anon" => HttpResponse::json(
                200,
                json!({ "text": "Anonymous body.", "year": 2012 }).to_string(),
            ),
            other => HttpResponse::text(404, format!("no route {other}")),
        }
    });
    *base.lock().unwrap() = server.base_url.clone();

    let out = TempDir::new().unwrap();
    let spec = crawl_spec(&server.base_url, migrant_keywords(&["anon"]));
    let outcome = fetch_documents(&spec, out.path()).unwrap();

    let url = format!("{}/docs/anon", server.base_url);
    let expected_id = format!("doc-{}", &csrag_core::hashing::sha256_hex(&url)[..16]);
    assert_eq!(outcome.new_documents, 1);
    assert_eq!(outcome.manifest[0].id, expected_id);
    assert_eq!(outcome.manifest[0].fname, format!("{expected_id}.json"));
    let doc = read_doc(out.path(), TargetGroup::Migrants, &expected_id);
    assert_eq!(doc.text, "Anonymous body.");
}

#[test]
fn each_requested_doc_type_gets_its_own_listing_pass() {
    let log: RequestLog = Arc::new(Mutex::new(Vec::new()));
    let handler_log = Arc::clone(&log);
    let base: Arc<Mutex<String>> = Arc::new(Mutex::new(String::new()));
    let handler_base = Arc::clone(&base);
    let server = TestServer::start(move |req| {
        handler_log.lock().unwrap().push(req.clone());
        let base = handler_base.lock().unwrap().clone();
        match (req.path_only(), req.query_param("type").as_deref()) {
            ("/search", Some("REPORT")) => listing(
                json!([{ "url": format!("{base}/docs/r1"), "id": "doc-r1", "year": 2010 }]),
                false,
            ),
            ("/search", Some("RULING")) => listing(json!([]), false),
            ("/docs/r1", _) => HttpResponse::text(200, "Typed body."),
            (other, _) => HttpResponse::text(404, format!("no route {other}")),
        }
    });
    *base.lock().unwrap() = server.base_url.clone();

    let out = TempDir::new().unwrap();
    let mut keywords = BTreeMap::new();
    keywords.insert(TargetGroup::Jews, vec!["law".to_string()]);
    let mut spec = crawl_spec(&server.base_url, keywords);
    spec.doc_types = vec!["REPORT".to_string(), "RULING".to_string()];
    let outcome = fetch_documents(&spec, out.path()).unwrap();

    assert_eq!(outcome.new_documents, 1);
    assert!(outcome.errors.is_empty(), "unexpected errors: {:?}", outcome.errors);
    assert_eq!(outcome.manifest[0].doc_type, "REPORT", "type pass labels untyped results");
    assert_eq!(outcome.manifest[0].target, TargetGroup::Jews);

    let log = log.lock().unwrap();
    let listing_types: Vec<Option<String>> = log
        .iter()
        .filter(|r| r.path_only() == "/search")
        .map(|r| r.query_param("type"))
        .collect();
    assert_eq!(
        listing_types,
        [Some("REPORT".to_string()), Some("RULING".to_string())],
        "one pass per configured type, in order"
    );
    let report_pass = log.iter().find(|r| r.path_only() == "/search").unwrap();
    assert_eq!(
        report_pass.query_params().last().map(|(k, _)| k.clone()).as_deref(),
        Some("type"),
        "the type filter rides after the standard parameters"
    );
}
