//! Drives the HTTP endpoints end to end against a temporary store, without
//! binding a socket.

use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{header, Request, StatusCode};
use axum::Router;
use hscreen_ingest::{router, IngestService};
use serde_json::{json, Value};
use tower::util::ServiceExt;

const IMEI: &str = "490154203237518";
const IMEI_B: &str = "356938035643809";
const TWITTER: &str = "102030405060708090";
const TWITTER_B: &str = "908070605040302010";

fn app() -> (tempfile::TempDir, Router) {
    let dir = tempfile::tempdir().unwrap();
    let svc = Arc::new(IngestService::open(dir.path()).unwrap());
    (dir, router(svc))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = match body {
        Some(v) => Request::builder()
            .method(method)
            .uri(uri)
            .header(header::CONTENT_TYPE, "application/json")
            .body(Body::from(v.to_string()))
            .unwrap(),
        None => Request::builder()
            .method(method)
            .uri(uri)
            .body(Body::empty())
            .unwrap(),
    };
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = to_bytes(res.into_body(), usize::MAX).await.unwrap();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap()
    };
    (status, value)
}

async fn register(app: &Router, imei: &str, twitter_id: &str) -> (StatusCode, Value) {
    call(
        app,
        "POST",
        "/participants",
        Some(json!({ "imei": imei, "twitter_id": twitter_id })),
    )
    .await
}

async fn ingest(app: &Router, key: &str, cn: &str, week: u32, payload: &str) -> (StatusCode, Value) {
    call(
        app,
        "POST",
        "/ingest",
        Some(json!({ "source_key": key, "cn": cn, "week": week, "payload": payload })),
    )
    .await
}

#[tokio::test]
async fn full_flow_round_trips_every_stream_byte_for_byte() {
    let (_dir, app) = app();
    let (status, body) = register(&app, IMEI, TWITTER).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["participant_id"], "p01");
    // Idempotent replay of the same pair.
    let (status, body) = register(&app, IMEI, TWITTER).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["participant_id"], "p01");

    let gds = "7\n";
    let accel = "p01,0,0.1,0.2,9.8\np01,50000000,0.2,0.1,9.7\n";
    let tweets = format!("{TWITTER}\t111222333444555666\t1000\tfeeling sad tonight\n");

    let (status, body) = ingest(&app, IMEI, "01", 2, gds).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["records"], 1);
    assert_eq!(body["deduplicated"], false);
    let (status, body) = ingest(&app, IMEI, "02", 2, accel).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["records"], 2);
    let (status, _) = ingest(&app, TWITTER, "03", 2, &tweets).await;
    assert_eq!(status, StatusCode::OK);

    let (status, week) = call(&app, "GET", "/participants/p01/weeks/2", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(week["gds"], gds);
    assert_eq!(week["accel"], accel);
    assert_eq!(week["tweets"], tweets.as_str());

    // A week nothing was sent for reads back with every stream absent.
    let (status, empty) = call(&app, "GET", "/participants/p01/weeks/5", None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(empty["gds"].is_null() && empty["accel"].is_null() && empty["tweets"].is_null());
}

#[tokio::test]
async fn unknown_stream_codes_and_keys_are_rejected() {
    let (_dir, app) = app();
    register(&app, IMEI, TWITTER).await;

    let (status, body) = ingest(&app, IMEI, "99", 0, "7\n").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(body["error"].as_str().unwrap().contains("99"), "{body}");

    let (status, body) = ingest(&app, IMEI_B, "01", 0, "7\n").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert!(
        body["error"].as_str().unwrap().contains("not registered"),
        "{body}"
    );

    let (status, _) = ingest(&app, "49015420323751", "01", 0, "7\n").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn collisions_and_malformed_registrations_map_to_http_errors() {
    let (_dir, app) = app();
    register(&app, IMEI, TWITTER).await;
    let (status, body) = register(&app, IMEI, TWITTER_B).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert!(
        body["error"].as_str().unwrap().contains("already registered"),
        "{body}"
    );
    let (status, _) = register(&app, "not-an-imei-0000", TWITTER_B).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn replayed_envelopes_come_back_with_a_dedup_notice() {
    let (_dir, app) = app();
    register(&app, IMEI, TWITTER).await;
    let (_, first) = ingest(&app, IMEI, "01", 0, "9\n").await;
    assert_eq!(first["deduplicated"], false);
    let (status, second) = ingest(&app, IMEI, "01", 0, "9\n").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(second["deduplicated"], true);
    let (_, week) = call(&app, "GET", "/participants/p01/weeks/0", None).await;
    assert_eq!(week["gds"], "9\n");
}

#[tokio::test]
async fn malformed_payloads_report_their_line_number() {
    let (_dir, app) = app();
    register(&app, IMEI, TWITTER).await;
    let bad = "p01,0,0.1,0.2,9.8\np01,50000000,0.1,0.2,oops\n";
    let (status, body) = ingest(&app, IMEI, "02", 0, bad).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(body["error"].as_str().unwrap().contains("line 2"), "{body}");
}

#[tokio::test]
async fn fetch_rejects_unknown_participants() {
    let (_dir, app) = app();
    let (status, _) = call(&app, "GET", "/participants/p01/weeks/0", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}
