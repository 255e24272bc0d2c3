//! Corpus persistence round trips: document JSONL, manifest CSV, and the
//! hate-speech dataset CSV, plus the reject-instead-of-abort loading policy.

mod common;

use std::fs;

use common::make_doc;
use csrag_core::corpus::{
    corpus_stats, load_documents, load_hs_dataset, read_manifest_csv, save_documents_jsonl,
    save_hs_dataset, write_manifest_csv, Document, HateSpeechInstance, LoadOptions, TargetGroup,
};
use tempfile::TempDir;

fn sample_docs() -> Vec<Document> {
    vec![
        make_doc("b-doc", TargetGroup::Women, "Second document. It has two sentences."),
        make_doc("a-doc", TargetGroup::Jews, "First document text about history."),
        make_doc("c-doc", TargetGroup::Lgbt, "Third document text about rights."),
    ]
}

#[test]
fn documents_jsonl_round_trip() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("kb.jsonl");
    let docs = sample_docs();
    save_documents_jsonl(&docs, &path).unwrap();

    let raw = fs::read_to_string(&path).unwrap();
    assert_eq!(raw.lines().count(), 3);
    let first: serde_json::Value = serde_json::from_str(raw.lines().next().unwrap()).unwrap();
    assert_eq!(first["id"], "a-doc");
    assert_eq!(first["target"], "JEWS");
    assert!(first["text"].is_string());

    let load = load_documents(&path, &LoadOptions::default()).unwrap();
    assert!(load.rejects.is_empty());
    let ids: Vec<&str> = load.documents.iter().map(|d| d.meta.id.as_str()).collect();
    assert_eq!(ids, ["a-doc", "b-doc", "c-doc"]);
    let original_by_id = |id: &str| docs.iter().find(|d| d.meta.id == id).unwrap();
    for doc in &load.documents {
        assert_eq!(doc, original_by_id(&doc.meta.id));
    }
}

#[test]
fn loads_directory_trees_and_json_arrays() {
    let dir = TempDir::new().unwrap();
    let nested = dir.path().join("nested");
    fs::create_dir(&nested).unwrap();

    save_documents_jsonl(&[make_doc("x1", TargetGroup::Women, "Text one.")], &dir.path().join("a.jsonl"))
        .unwrap();
    let array = serde_json::to_string(&vec![
        make_doc("x3", TargetGroup::Poc, "Text three."),
        make_doc("x2", TargetGroup::Muslims, "Text two."),
    ])
    .unwrap();
    fs::write(nested.join("b.json"), array).unwrap();
    fs::write(nested.join("ignored.txt"), "not a corpus file").unwrap();

    let load = load_documents(dir.path(), &LoadOptions::default()).unwrap();
    assert!(load.rejects.is_empty());
    let ids: Vec<&str> = load.documents.iter().map(|d| d.meta.id.as_str()).collect();
    assert_eq!(ids, ["x1", "x2", "x3"]);
}

#[test]
fn bad_records_are_rejected_without_aborting() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("kb.jsonl");

    let good = make_doc("good", TargetGroup::Women, "Fine text.");
    let mut bad_year = make_doc("stale", TargetGroup::Women, "Old text.");
    bad_year.meta.year = 1850;
    let dup = make_doc("good", TargetGroup::Women, "Duplicate id.");
    let mut empty = make_doc("empty", TargetGroup::Women, "   ");
    empty.meta.fname = "empty.pdf".into();

    let mut lines = String::new();
    for doc in [&good, &bad_year, &dup, &empty] {
        lines.push_str(&serde_json::to_string(doc).unwrap());
        lines.push('\n');
    }
    lines.push_str("{ not json\n");
    fs::write(&path, lines).unwrap();

    let load = load_documents(&path, &LoadOptions::default()).unwrap();
    assert_eq!(load.documents.len(), 1);
    assert_eq!(load.documents[0].meta.id, "good");
    assert_eq!(load.rejects.len(), 4);
    for (reject, line) in load.rejects.iter().zip([2, 3, 4, 5]) {
        assert!(
            reject.location.ends_with(&format!(":{line}")),
            "location {:?} should point at line {line}",
            reject.location
        );
    }
    assert!(load.rejects[0].reason.contains("year"));
    assert!(load.rejects[1].reason.contains("duplicate"));
    assert!(load.rejects[2].reason.contains("empty"));
}

#[test]
fn manifest_csv_round_trip_sorted_by_target_then_id() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("manifest.csv");
    let metas: Vec<_> = sample_docs().into_iter().map(|d| d.meta).collect();
    write_manifest_csv(&metas, &path).unwrap();

    let raw = fs::read_to_string(&path).unwrap();
    assert_eq!(raw.lines().next().unwrap(), "id,fname,target,type,year,url,source");

    let back = read_manifest_csv(&path).unwrap();
    let order: Vec<&str> = back.iter().map(|m| m.id.as_str()).collect();
    assert_eq!(order, ["b-doc", "a-doc", "c-doc"], "WOMEN sorts before JEWS and LGBT");
    for meta in &back {
        assert_eq!(Some(meta), metas.iter().find(|m| m.id == meta.id));
    }
}

#[test]
fn hs_dataset_loads_leniently_and_round_trips() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("hs.csv");
    fs::write(
        &path,
        "hs_id,text,target,reference_cs\n\
         hs1,Some hateful text,WOMEN,A reference reply.\n\
         hs2,More text,martians,\n\
         hs3,Third text,LGBT,\n\
         hs1,Duplicate id,WOMEN,\n\
         ,Missing id,WOMEN,\n",
    )
    .unwrap();

    let load = load_hs_dataset(&path).unwrap();
    assert_eq!(load.instances.len(), 3);
    assert_eq!(load.unknown_target_count, 1);
    assert_eq!(load.rejects.len(), 2);

    let hs2 = load.instances.iter().find(|h| h.hs_id == "hs2").unwrap();
    assert_eq!(hs2.target, TargetGroup::Other);
    assert_eq!(hs2.reference_cs, None);
    let hs1 = load.instances.iter().find(|h| h.hs_id == "hs1").unwrap();
    assert_eq!(hs1.reference_cs.as_deref(), Some("A reference reply."));

    let out = dir.path().join("hs_out.csv");
    save_hs_dataset(&load.instances, &out).unwrap();
    let reload = load_hs_dataset(&out).unwrap();
    assert_eq!(reload.instances, load.instances);
    assert_eq!(reload.unknown_target_count, 0, "OTHER is a known label on reload");
}

#[test]
fn stats_aggregate_by_source_and_target() {
    let mut docs = sample_docs();
    docs[0].meta.source = "EURLEX".into();
    let stats = corpus_stats(&docs);
    assert_eq!(stats.documents, 3);
    assert_eq!(stats.by_source.len(), 2);
    assert_eq!(stats.by_source["UN"].documents, 2);
    assert_eq!(stats.by_source["EURLEX"].documents, 1);
    assert_eq!(stats.by_target[&TargetGroup::Women], 1);
    let sum: usize = stats.by_source.values().map(|s| s.total_words).sum();
    assert_eq!(sum, stats.total_words);
    assert!(stats.mean_words > 0.0);
}

#[test]
fn hs_instances_serialize_without_null_reference() {
    let hs = HateSpeechInstance {
        hs_id: "h1".into(),
        text: "text".into(),
        target: TargetGroup::Disabled,
        reference_cs: None,
    };
    let json = serde_json::to_string(&hs).unwrap();
    assert!(!json.contains("reference_cs"));
    assert!(json.contains("\"DISABLED\""));
}
