mod common;

use std::process::Command;

use common::fixtures;
use eventlens::engine::Snapshot;
use serde_json::Value;

fn eventlens(args: &[&str]) -> (bool, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_eventlens"))
        .args(args)
        .env_remove("EVENTLENS_SNAPSHOT")
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    (
        out.status.success(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn ingest_index_query() {
    let f = fixtures();
    let dir = tempfile::tempdir().unwrap();
    let snap = dir.path().join("snap");
    let s = snap.to_str().unwrap();
    let (ok, _, err) = eventlens(&[
        "ingest",
        "--input",
        f.join("olympics-mini.jsonl").to_str().unwrap(),
        "--catalog",
        f.join("catalog.jsonl").to_str().unwrap(),
        "--gazetteer",
        f.join("gazetteer.jsonl").to_str().unwrap(),
        "--testbeds",
        f.join("testbeds").to_str().unwrap(),
        "--out",
        s,
    ]);
    assert!(ok, "{err}");
    let (ok, _, err) = eventlens(&["search", "--snapshot", s, "summer olympics"]);
    assert!(!ok);
    assert!(err.contains("index"), "{err}");

    let (ok, out, err) = eventlens(&["--json", "index", "--snapshot", s]);
    assert!(ok, "{err}");
    let version = serde_json::from_str::<Value>(&out).unwrap()["version"]
        .as_str()
        .unwrap()
        .to_string();
    assert_eq!(Snapshot::load(&snap).unwrap().version, version);

    let (ok, out, _) = eventlens(&["--json", "search", "--snapshot", s, "summer olympics"]);
    assert!(ok);
    assert_eq!(
        serde_json::from_str::<Value>(&out).unwrap()["docs"]
            .as_array()
            .unwrap()
            .len(),
        3
    );

    let (ok, out, _) = eventlens(&["mine", "--snapshot", s, "--min-support", "1", "summer olympics"]);
    assert!(ok);
    assert_eq!(out.lines().count(), 3);

    let (ok, out, err) = eventlens(&[
        "cube",
        "--snapshot",
        s,
        "--min-support",
        "1",
        "--cube-time",
        "month",
        "--pipeline",
        "slice entity=Usain_Bolt; dice geo=China; drillup time",
    ]);
    assert!(ok, "{err}");
    let rows: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].starts_with("2008\tChina\tUsain_Bolt\t"), "{out}");

    let (ok, _, err) = eventlens(&[
        "cube",
        "--snapshot",
        s,
        "--pipeline",
        "drillup time; slice geo=Atlantis",
        "--min-support",
        "1",
    ]);
    assert!(!ok);
    assert!(err.contains("op 1"), "{err}");

    let (ok, out, _) = eventlens(&[
        "diversify",
        "--snapshot",
        s,
        "--budget",
        "3",
        "--min-support",
        "1",
        "summer olympics",
    ]);
    assert!(ok);
    assert!(out.contains("covered events [0, 1, 2]"), "{out}");
    let (ok, out, _) = eventlens(&[
        "summarize",
        "--snapshot",
        s,
        "--word-budget",
        "60",
        "--min-support",
        "1",
        "summer olympics",
    ]);
    assert!(ok);
    assert_eq!(out.lines().filter(|l| l.starts_with('[')).count(), 3);
    let (ok, out, _) = eventlens(&["eval", "--snapshot", s, "--min-support", "1", "olympics"]);
    assert!(ok);
    assert!(out.contains("summer olympics"), "{out}");
}

#[test]
fn serve_refuses_missing_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("eventlens.toml");
    std::fs::write(&cfg, format!("port = 0\nsnapshot = {:?}\n", dir.path().join("absent"))).unwrap();
    let (ok, _, err) = eventlens(&["serve", "--config", cfg.to_str().unwrap()]);
    assert!(!ok);
    assert!(err.contains("absent"), "{err}");
}
