use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use eventlens::corpus::{IndexConfig, IngestConfig};
use eventlens::engine::{
    ingest_sources, CubeRequest, DiversifyRequest, MineRequest, SearchRequest, Snapshot, SourcePaths, SummarizeRequest,
};
use eventlens::miner::MinerParams;
use eventlens::synth;
use serde_json::Value;

fn fixtures() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures"))
}

fn fixture_snapshot() -> Snapshot {
    let f = fixtures();
    let (corpus, h, testbeds, _) = ingest_sources(
        &SourcePaths {
            corpus: &f.join("olympics-mini.jsonl"),
            catalog: &f.join("catalog.jsonl"),
            gazetteer: &f.join("gazetteer.jsonl"),
            testbeds: Some(&f.join("testbeds")),
        },
        &IngestConfig::default(),
    )
    .unwrap();
    Snapshot::build(corpus, h, testbeds, &IndexConfig::default())
}

fn raw_records(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

/// Documents whose raw text contains `word`, by a plain scan of the input file.
fn docs_with_word(records: &[Value], word: &str) -> BTreeSet<String> {
    records
        .iter()
        .filter(|r| {
            r["text"]
                .as_str()
                .unwrap()
                .split(|c: char| !c.is_alphanumeric())
                .any(|w| w.eq_ignore_ascii_case(word))
        })
        .map(|r| r["doc_id"].as_str().unwrap().to_string())
        .collect()
}

#[test]
fn postings_match_a_scan_of_the_input() {
    let snap = fixture_snapshot();
    let records = raw_records(&fixtures().join("olympics-mini.jsonl"));
    for word in ["usain", "phelps", "copacabana", "olympics", "tibet"] {
        let id = snap
            .corpus
            .vocabulary
            .id(word)
            .unwrap_or_else(|| panic!("{word} indexed"));
        let got: BTreeSet<String> = snap
            .index
            .postings(id)
            .iter()
            .map(|p| snap.corpus.documents[p.doc as usize].id.clone())
            .collect();
        assert_eq!(got, docs_with_word(&records, word), "{word}");
    }
    assert_eq!(
        docs_with_word(&records, "usain"),
        BTreeSet::from(["london-2012".to_string()])
    );
}

#[test]
fn entity_only_query_finds_the_documents_naming_it() {
    let snap = fixture_snapshot();
    let records = raw_records(&fixtures().join("olympics-mini.jsonl"));
    let want: BTreeSet<String> = records
        .iter()
        .filter(|r| r["entities"].as_array().unwrap().iter().any(|e| e == "Usain_Bolt"))
        .map(|r| r["doc_id"].as_str().unwrap().to_string())
        .collect();
    let results = snap
        .search(&SearchRequest {
            q: "entity:{Usain_Bolt}".into(),
            ..Default::default()
        })
        .unwrap();
    let got: BTreeSet<String> = results.docs.iter().map(|d| d.doc_id.clone()).collect();
    assert_eq!(got, want);
}

fn synthetic_snapshot(seed: u64, n: usize) -> Snapshot {
    let h = synth::world(12);
    let units = synth::bulk_units(&mut synth::rng(seed), n, 12);
    let corpus = synth::build_corpus(&units, &h);
    Snapshot::build(corpus, h, Default::default(), &IndexConfig::default())
}

fn sigma(min_support: usize) -> MinerParams {
    MinerParams {
        min_support,
        max_events: 1000,
        ..MinerParams::default()
    }
}

#[test]
fn synthetic_snapshot_survives_a_round_trip() {
    let snap = synthetic_snapshot(3, 300);
    let dir = tempfile::tempdir().unwrap();
    snap.save(dir.path()).unwrap();
    let loaded = Snapshot::load(dir.path()).unwrap();
    assert_eq!(loaded.version, snap.version);
    let req = MineRequest {
        params: sigma(2),
        ..MineRequest::default()
    };
    assert_eq!(loaded.mine(&req).unwrap(), snap.mine(&req).unwrap());
}

#[test]
fn mined_events_are_backed_by_their_units() {
    let snap = synthetic_snapshot(5, 400);
    let events = snap
        .mine(&MineRequest {
            params: sigma(3),
            ..MineRequest::default()
        })
        .unwrap();
    assert!(!events.is_empty());
    for e in events.iter() {
        assert!(e.support >= 3);
        assert_eq!(e.supporting_units.len(), e.support);
        for &r in &e.supporting_units {
            let unit = snap.corpus.unit(r);
            assert!(e.entities.iter().all(|x| unit.entities.contains(x)));
            assert!(unit.time.is_some_and(|t| t.overlaps(&e.time)));
        }
    }
    let total: f64 = events.iter().map(|e| e.score).sum();
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn plain_cube_accounts_for_every_event_entity() {
    let snap = synthetic_snapshot(7, 400);
    let mine = MineRequest {
        params: sigma(2),
        ..MineRequest::default()
    };
    let events = snap.mine(&mine).unwrap();
    let table = snap
        .cube(&CubeRequest {
            mine,
            ..CubeRequest::default()
        })
        .unwrap();
    let count: usize = table.rows.iter().map(|r| r.count).sum();
    assert_eq!(count, events.iter().map(|e| e.entities.len()).sum::<usize>());
    let mass: f64 = table.rows.iter().map(|r| r.score_mass).sum();
    let want: f64 = events.iter().map(|e| e.score * e.entities.len() as f64).sum();
    assert!((mass - want).abs() < 1e-9);
}

#[test]
fn diversify_and_summarize_respect_budgets() {
    let snap = synthetic_snapshot(11, 400);
    let q = "w1 w2 w3";
    let div = snap
        .diversify(&DiversifyRequest {
            q: q.into(),
            budget: 4,
            miner: sigma(2),
            ..DiversifyRequest::default()
        })
        .unwrap();
    assert!(div.steps.len() <= 4);
    let docs: BTreeSet<u32> = div.steps.iter().map(|s| s.doc).collect();
    assert_eq!(docs.len(), div.steps.len());
    let newly: BTreeSet<u32> = div.steps.iter().flat_map(|s| s.newly_covered.iter().copied()).collect();
    assert_eq!(newly, div.covered.iter().copied().collect());

    let summary = snap
        .summarize(&SummarizeRequest {
            q: q.into(),
            word_budget: 40,
            miner: sigma(2),
            ..SummarizeRequest::default()
        })
        .unwrap();
    assert!(summary.words <= 40);
    assert_eq!(summary.words, summary.sentences.iter().map(|s| s.words).sum::<u32>());
}
