use std::path::PathBuf;

use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use dacex_core::grid::{parse_table, Format};
use dacex_svc::{router, BODY_LIMIT};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn read_json(name: &str, file: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(fixture(name).join(file)).unwrap()).unwrap()
}

/// A synthesize request built from a fixture, with its config overrides.
fn fixture_request(name: &str) -> Value {
    let csv = std::fs::read_to_string(fixture(name).join("table.csv")).unwrap();
    let rows = parse_table(&csv, Format::Csv).unwrap().to_rows();
    let spec = read_json(name, "spec.json");
    let mut req = json!({ "table": rows, "sketch": spec["sketch"], "examples": spec["examples"] });
    if let Some(t) = spec.get("targets") {
        req["targets"] = t.clone();
    }
    if let Some(c) = read_json(name, "meta.json").get("config") {
        req["config"] = c.clone();
    }
    req
}

async fn send(method: &str, uri: &str, body: Option<String>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    if body.is_some() {
        req = req.header(header::CONTENT_TYPE, "application/json");
    }
    let req = req.body(body.map_or_else(Body::empty, Body::from)).unwrap();
    let resp = router().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

async fn post(uri: &str, body: &Value) -> (StatusCode, Value) {
    send("POST", uri, Some(body.to_string())).await
}

/// Fill values keyed like expected.json.
fn filled(body: &Value) -> serde_json::Map<String, Value> {
    body["fills"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|f| f["status"] == "filled")
        .map(|f| (format!("{},{}", f["cell"]["row"], f["cell"]["col"]), f["value"].clone()))
        .collect()
}

fn without_timing(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("timing_ms");
    v
}

#[tokio::test]
async fn health_reports_ok() {
    let (status, body) = send("GET", "/health", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["status"], "ok");
    assert_eq!(body["version"], env!("CARGO_PKG_VERSION"));
}

#[tokio::test]
async fn fallback_task_fills_match_expected() {
    let (status, body) = post("/api/synthesize", &fixture_request("locf_with_fallback")).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let hole = &body["holes"]["1"];
    assert_eq!(hole["status"], "solved");
    assert_eq!(hole["branches"], 2);
    assert!(hole["theta"].as_f64().unwrap() > 0.0);
    assert_eq!(body["complete"], true);
    let want = read_json("locf_with_fallback", "expected.json");
    assert_eq!(&filled(&body), want.as_object().unwrap());
}

#[tokio::test]
async fn every_fixture_is_served() {
    let mut names: Vec<_> = std::fs::read_dir(fixture("")).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    for name in names {
        let name = name.to_str().unwrap();
        let (status, body) = post("/api/synthesize", &fixture_request(name)).await;
        assert_eq!(status, StatusCode::OK, "{name}: {body}");
        let want = read_json(name, "expected.json");
        let got = filled(&body);
        for (cell, v) in want.as_object().unwrap() {
            assert_eq!(got.get(cell), Some(v), "{name} at {cell}");
        }
    }
}

#[tokio::test]
async fn unknown_function_is_unprocessable() {
    let mut req = fixture_request("row_sum_offset");
    req["sketch"] = json!("FOO(?1)");
    let (status, body) = post("/api/synthesize", &req).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"], "UnknownFunction");
    assert!(body["detail"].as_str().unwrap().contains("FOO"));
}

#[tokio::test]
async fn malformed_requests_are_unprocessable() {
    let base = fixture_request("row_sum_offset");
    let mut outside = base.clone();
    outside["examples"]["1"][0]["in"] = json!([9, 9]);
    let mut no_examples = base.clone();
    no_examples["examples"] = json!({});
    let mut bad_config = base.clone();
    bad_config["config"] = json!({ "depth": 3 });
    let mut ragged = base.clone();
    ragged["table"] = json!([["1", "2"], ["3"]]);
    for (what, req) in [("outside", outside), ("no examples", no_examples), ("config", bad_config), ("ragged", ragged)] {
        let (status, body) = post("/api/synthesize", &req).await;
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{what}: {body}");
        assert!(body["detail"].is_string(), "{what}: {body}");
    }
    let (status, _) = send("POST", "/api/synthesize", Some("{not json".into())).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, _) = post("/api/synthesize", &json!({ "sketch": "?1" })).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn timeout_returns_partial_status() {
    let mut req = fixture_request("locf_with_fallback");
    req["config"] = json!({ "timeout_ms": 1 });
    let (status, body) = post("/api/synthesize", &req).await;
    assert_eq!(status, StatusCode::REQUEST_TIMEOUT, "{body}");
    assert_eq!(body["holes"]["1"]["status"], "timeout");
    assert_eq!(body["fills"], json!([]));
    assert_eq!(body["complete"], false);
}

#[tokio::test]
async fn contradictory_examples_have_no_program() {
    // Interior cells of a uniform row look alike, so no branch can move
    // left at one and right at the other.
    let req = json!({
        "table": [vec!["a"; 41]],
        "sketch": "?1",
        "examples": { "1": [
            { "in": [1, 20], "out": [[1, 19]] },
            { "in": [1, 21], "out": [[1, 22]] }
        ] }
    });
    let (status, body) = post("/api/synthesize", &req).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["holes"]["1"]["status"], "no_program", "{body}");
    assert_eq!(body["complete"], false);
}

#[tokio::test]
async fn apply_round_trips_synthesized_programs() {
    let req = fixture_request("row_sum_offset");
    let (_, synth) = post("/api/synthesize", &req).await;
    let programs = json!({ "1": synth["holes"]["1"]["program"] });
    let apply = json!({ "table": req["table"], "sketch": req["sketch"], "programs": programs });
    let (status, body) = post("/api/apply", &apply).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["fills"], synth["fills"]);
    assert_eq!(body["complete"], true);
    let row: Vec<_> = body["fills"].as_array().unwrap().iter().map(|f| f["value"].as_str().unwrap()).collect();
    assert_eq!(row, ["3", "3", "9"]);
}

#[tokio::test]
async fn apply_rejects_bad_programs() {
    let table = json!([["?", "1", "?"]]);
    let deep = "GetCell(GetCell(x, r, 1, \\y.\\z. True), r, 1, \\y.\\z. True)";
    let cases = [
        (json!({ "1": deep }), Some(1), "DepthExceeded"),
        (json!({ "1": "GetCell(x" }), None, "Syntax"),
        (json!({ "2": "GetCell(x, r, 1, \\y.\\z. True)" }), None, "UnboundHole"),
        (json!({ "zero": "GetCell(x, r, 1, \\y.\\z. True)" }), None, "BadHole"),
    ];
    for (programs, cap, kind) in cases {
        let req = json!({ "table": table, "sketch": "?1", "programs": programs, "depth_cap": cap });
        let (status, body) = post("/api/apply", &req).await;
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{kind}: {body}");
        assert_eq!(body["error"], kind);
    }
    let ok = json!({ "table": table, "sketch": "?1", "programs": { "1": deep } });
    let (status, body) = post("/api/apply", &ok).await;
    assert_eq!(status, StatusCode::OK, "{body}");
}

#[tokio::test]
async fn apply_honours_targets() {
    let req = json!({
        "table": [["?", "1", "?"]],
        "sketch": "?1",
        "programs": { "?1": "GetCell(x, r, 1, \\y.\\z. Val(z) != \"?\")" },
        "targets": { "kind": "cells", "cells": [[1, 1], [1, 3], [2, 1]] }
    });
    let (status, body) = post("/api/apply", &req).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let statuses: Vec<_> = body["fills"].as_array().unwrap().iter().map(|f| f["status"].clone()).collect();
    assert_eq!(statuses, [json!("filled"), json!("bottom"), json!("error")]);
    assert_eq!(body["fills"][0]["value"], "1");
    assert_eq!(body["complete"], false);
}

#[tokio::test]
async fn oversized_bodies_are_rejected() {
    let big = json!({ "table": [["x".repeat(BODY_LIMIT)]], "sketch": "?1", "examples": {} });
    let (status, _) = post("/api/synthesize", &big).await;
    assert_eq!(status, StatusCode::PAYLOAD_TOO_LARGE);
}

#[tokio::test]
async fn cors_is_enabled() {
    let req = Request::builder()
        .method("OPTIONS")
        .uri("/api/synthesize")
        .header(header::ORIGIN, "http://localhost:5173")
        .header(header::ACCESS_CONTROL_REQUEST_METHOD, "POST")
        .body(Body::empty())
        .unwrap();
    let resp = router().oneshot(req).await.unwrap();
    assert!(resp.status().is_success());
    assert!(resp.headers().contains_key(header::ACCESS_CONTROL_ALLOW_ORIGIN));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_identical_requests_agree() {
    let req = fixture_request("keyed_locf");
    let tasks: Vec<_> = (0..4).map(|_| tokio::spawn(post_owned(req.clone()))).collect();
    let mut bodies = Vec::new();
    for t in tasks {
        let (status, body) = t.await.unwrap();
        assert_eq!(status, StatusCode::OK);
        bodies.push(without_timing(body));
    }
    assert!(bodies.windows(2).all(|w| w[0] == w[1]));
}

async fn post_owned(body: Value) -> (StatusCode, Value) {
    post("/api/synthesize", &body).await
}

#[tokio::test]
async fn responses_do_not_depend_on_request_order() {
    let a = fixture_request("row_sum_offset");
    let b = fixture_request("group_count");
    let (_, a1) = post("/api/synthesize", &a).await;
    let (_, b1) = post("/api/synthesize", &b).await;
    let (_, b2) = post("/api/synthesize", &b).await;
    let (_, a2) = post("/api/synthesize", &a).await;
    assert_eq!(without_timing(a1), without_timing(a2));
    assert_eq!(without_timing(b1), without_timing(b2));
}
