mod common;

use std::sync::Arc;

use common::*;
use eventlens::annotations::TimeLevel;
use eventlens::cube::CubeLevelSpec;
use eventlens::engine::{CubeRequest, MineRequest, SearchRequest};
use eventlens::miner::MinerParams;
use serde_json::json;

fn sigma1() -> MinerParams {
    MinerParams {
        min_support: 1,
        ..MinerParams::default()
    }
}

const FIG4: &str = "slice entity=Usain_Bolt\ndice geo=China\ndrillup time";

#[tokio::test]
async fn health_reports_version() {
    let (dir, snap) = fixture_snapshot();
    let server = Server::start(dir.path()).await;
    let (status, body) = server.get("/health", &[]).await;
    assert_eq!(status, 200);
    assert_eq!(body["status"], "ok");
    assert_eq!(body["version"], snap.version.as_str());
    assert_eq!(body["testbeds"], json!(["olympics"]));
}

#[tokio::test]
async fn search_matches_library() {
    let (dir, snap) = fixture_snapshot();
    let server = Server::start(dir.path()).await;
    let (status, body) = server.get("/search", &[("q", "summer olympics".into())]).await;
    assert_eq!(status, 200);
    let env = envelope(body);
    assert_eq!(env.version, snap.version);
    assert_eq!(env.data["docs"].as_array().unwrap().len(), 3);
    let lib = snap
        .search(&SearchRequest {
            q: "summer olympics".into(),
            ..Default::default()
        })
        .unwrap();
    assert_eq!(env.data, as_wire(&lib));
}

#[tokio::test]
async fn search_filters_and_caps() {
    let (dir, snap) = fixture_snapshot();
    let server = Server::start(dir.path()).await;
    let (status, body) = server
        .get(
            "/search",
            &[
                ("q", "olympics".into()),
                ("entity", "Usain_Bolt".into()),
                ("n", "5000".into()),
            ],
        )
        .await;
    assert_eq!(status, 200);
    let env = envelope(body);
    assert!(env.truncated);
    let mut req = SearchRequest {
        q: "olympics entity:{Usain_Bolt}".into(),
        ..Default::default()
    };
    req.params.n = 100;
    assert_eq!(env.data, as_wire(&snap.search(&req).unwrap()));

    let (status, body) = server.get("/search", &[]).await;
    assert_eq!((status, body["code"].as_str()), (400, Some("empty_query")));
    let (status, body) = server.get("/search", &[("entity", "Nobody".into())]).await;
    assert_eq!((status, body["code"].as_str()), (400, Some("unknown_entity")));
    let (status, body) = server.get("/search", &[("n", "many".into())]).await;
    assert_eq!((status, body["code"].as_str()), (400, Some("bad_request")));
}

#[tokio::test]
async fn mining_endpoints_agree() {
    let (dir, snap) = fixture_snapshot();
    let server = Server::start(dir.path()).await;
    let req = MineRequest {
        q: Some("summer olympics".into()),
        params: sigma1(),
        ..Default::default()
    };
    let lib = as_wire(&snap.mine_records(&req).unwrap());
    let (status, body) = server.post_json("/events/mine", &req).await;
    assert_eq!(status, 200);
    assert_eq!(envelope(body).data, lib);
    let (status, body) = server
        .get(
            "/events",
            &[("q", "summer olympics".into()), ("min_support", "1".into())],
        )
        .await;
    assert_eq!(status, 200);
    assert_eq!(envelope(body).data, lib);
    assert_eq!(lib.as_array().unwrap().len(), 3);

    let (status, body) = server.get("/events", &[("min_support", "0".into())]).await;
    assert_eq!((status, body["code"].as_str()), (400, Some("invalid_params")));
}

#[tokio::test]
async fn cube_pipeline_fig4_cell() {
    let (dir, snap) = fixture_snapshot();
    let server = Server::start(dir.path()).await;
    let req = CubeRequest {
        mine: MineRequest {
            params: sigma1(),
            ..Default::default()
        },
        levels: CubeLevelSpec {
            time: TimeLevel::Month,
            ..Default::default()
        },
        pipeline: FIG4.into(),
    };
    let (status, body) = server.post_json("/cube/pipeline", &req).await;
    assert_eq!(status, 200);
    let env = envelope(body);
    let rows = env.data["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(
        (rows[0]["time"].as_str(), rows[0]["geo"].as_str()),
        (Some("2008"), Some("China"))
    );
    assert_eq!(rows[0]["entity"], "Usain_Bolt");
    assert_eq!(env.data, as_wire(&snap.cube(&req).unwrap()));

    let text_req = CubeRequest {
        levels: CubeLevelSpec::default(),
        ..req.clone()
    };
    let (status, body) = server
        .post_text(
            "/cube/pipeline",
            &[("min_support", "1".into())],
            "slice entity=Usain_Bolt; dice geo=China",
        )
        .await;
    assert_eq!(status, 200);
    let text_lib = snap
        .cube(&CubeRequest {
            pipeline: "slice entity=Usain_Bolt; dice geo=China".into(),
            ..text_req
        })
        .unwrap();
    assert_eq!(envelope(body).data, as_wire(&text_lib));

    let (status, body) = server
        .post_text(
            "/cube/pipeline",
            &[("min_support", "1".into())],
            "drillup time\nslice geo=Atlantis",
        )
        .await;
    assert_eq!(status, 422);
    assert_eq!(
        (body["code"].as_str(), body["op_index"].as_u64()),
        (Some("no_such_member"), Some(1))
    );
    let (status, body) = server.post_text("/cube/pipeline", &[], "spin time").await;
    assert_eq!(
        (status, body["code"].as_str(), body["op_index"].as_u64()),
        (422, Some("parse_error"), Some(0))
    );

    let (status, body) = server
        .post_json("/cube/build", &json!({"mine": {"params": {"min_support": 1}}}))
        .await;
    assert_eq!(status, 200);
    assert!(!envelope(body).data["rows"].as_array().unwrap().is_empty());
    let (status, _) = server
        .post_json("/cube/build", &json!({"pipeline": "drillup time"}))
        .await;
    assert_eq!(status, 400);
}

#[tokio::test]
async fn diversify_summarize_eval() {
    let (dir, _) = fixture_snapshot();
    let server = Server::start(dir.path()).await;
    let miner = json!({"min_support": 1});
    let (status, body) = server
        .post_json(
            "/diversify",
            &json!({"q": "summer olympics", "budget": 3, "miner": miner}),
        )
        .await;
    assert_eq!(status, 200);
    assert_eq!(envelope(body).data["covered"].as_array().unwrap().len(), 3);
    let (status, body) = server
        .post_json("/diversify", &json!({"q": "summer olympics", "budget": 0}))
        .await;
    assert_eq!((status, body["code"].as_str()), (400, Some("invalid_budget")));

    let (status, body) = server
        .post_json(
            "/summarize",
            &json!({"q": "summer olympics", "word_budget": 60, "miner": miner}),
        )
        .await;
    assert_eq!(status, 200);
    assert_eq!(envelope(body).data["sentences"].as_array().unwrap().len(), 3);

    let (status, body) = server
        .post_json("/eval/run", &json!({"testbed": "olympics", "miner": miner}))
        .await;
    assert_eq!(status, 200);
    assert_eq!(envelope(body).data["rows"][0]["f1"], 1.0);
    let (status, body) = server.post_json("/eval/run", &json!({"testbed": "nope"})).await;
    assert_eq!((status, body["code"].as_str()), (404, Some("unknown_testbed")));

    let r = server
        .client
        .post(server.url("/eval/run"))
        .body("{not json")
        .send()
        .await
        .unwrap();
    assert_eq!(r.status().as_u16(), 400);
}

#[tokio::test]
async fn reload_same_and_corrupt() {
    let (dir, snap) = fixture_snapshot();
    let server = Server::start(dir.path()).await;
    let (status, body) = server.post_json("/admin/reload", &json!({})).await;
    assert_eq!(status, 200);
    assert_eq!(
        (body["version"].as_str(), body["previous_version"].as_str()),
        (Some(snap.version.as_str()), Some(snap.version.as_str()))
    );

    let bad = tempfile::tempdir().unwrap();
    for f in std::fs::read_dir(dir.path()).unwrap() {
        let f = f.unwrap().path();
        if f.is_file() {
            std::fs::copy(&f, bad.path().join(f.file_name().unwrap())).unwrap();
        }
    }
    let corpus = bad.path().join("corpus.cbor");
    let mut bytes = std::fs::read(&corpus).unwrap();
    bytes[10] ^= 0xff;
    std::fs::write(&corpus, bytes).unwrap();
    let (status, body) = server.post_json("/admin/reload", &json!({"path": bad.path()})).await;
    assert_eq!((status, body["code"].as_str()), (422, Some("reload_failed")));

    let (status, body) = server.get("/search", &[("q", "summer olympics".into())]).await;
    assert_eq!(status, 200);
    assert_eq!(envelope(body).version, snap.version);
    // A failed reload leaves the configured path alone as well.
    let (status, _) = server.post_json("/admin/reload", &json!({})).await;
    assert_eq!(status, 200);
}

#[tokio::test]
async fn search_storm_during_reloads() {
    let (dir_a, a) = fixture_snapshot();
    let (dir_b, b) = trimmed_snapshot();
    assert_ne!(a.version, b.version);
    let expected = Arc::new(by_version(&[&a, &b]));
    let server = Arc::new(Server::start(dir_a.path()).await);
    let paths = [snapshot_dir(&dir_a), snapshot_dir(&dir_b)];

    let reloader = {
        let server = server.clone();
        let paths = paths.clone();
        tokio::spawn(async move {
            for i in 0..20 {
                let (status, _) = server.post_json("/admin/reload", &json!({"path": paths[i % 2]})).await;
                assert_eq!(status, 200);
            }
        })
    };
    let mut tasks = Vec::new();
    for t in 0..8 {
        let server = server.clone();
        let expected = expected.clone();
        tasks.push(tokio::spawn(async move {
            let queries = ["summer olympics", "olympics china", "gold", "bolt"];
            let mut seen = Vec::new();
            for i in 0..25 {
                let q = queries[(t + i) % queries.len()];
                let (status, body) = server.get("/search", &[("q", q.into())]).await;
                assert_eq!(status, 200, "{body}");
                let env = envelope(body);
                let snap = expected.get(&env.version).expect("known version");
                let lib = snap
                    .search(&SearchRequest {
                        q: q.into(),
                        ..Default::default()
                    })
                    .unwrap();
                assert_eq!(env.data, as_wire(&lib), "version {} query {q}", env.version);
                seen.push(env.version);
            }
            seen
        }));
    }
    reloader.await.unwrap();
    for t in tasks {
        assert_eq!(t.await.unwrap().len(), 25);
    }
}
