#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use hangul_coach_server::config::ServeConfig;
use hangul_coach_server::service::{router, AppState};
use http_body_util::BodyExt;
use tower::ServiceExt;

pub const ANSWER: &str = "둘 다 청소하기 싫어 귀찮아";
pub const USER: &str = "요일 날 여기다 청소하기 싫어 귀찮아";

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture(rel: &str) -> Vec<u8> {
    std::fs::read(fixtures().join(rel)).unwrap()
}

pub fn config(store: &Path) -> ServeConfig {
    let mut config = ServeConfig::parse(
        "model = \"model.ksnm\"\ncorpus = \"corpus\"\nstore = \"unused\"\n[stt]\nmock_table_path = \"mock_table.json\"\n",
    )
    .unwrap();
    config.resolve_paths(&fixtures());
    config.store = store.to_path_buf();
    config
}

pub fn app(store: &Path) -> (Router, Arc<AppState>) {
    let state = Arc::new(AppState::from_config(&config(store)).unwrap());
    (router(Arc::clone(&state), None), state)
}

/// A multipart/form-data body; the field named `audio` is sent as a file.
pub fn multipart(fields: &[(&str, &[u8])]) -> (String, Vec<u8>) {
    let boundary = "coach-boundary-7f3a";
    let mut body = Vec::new();
    for (name, value) in fields {
        body.extend_from_slice(format!("--{boundary}\r\n").as_bytes());
        if *name == "audio" {
            body.extend_from_slice(
                b"Content-Disposition: form-data; name=\"audio\"; filename=\"take.wav\"\r\nContent-Type: audio/wav\r\n\r\n",
            );
        } else {
            body.extend_from_slice(format!("Content-Disposition: form-data; name=\"{name}\"\r\n\r\n").as_bytes());
        }
        body.extend_from_slice(value);
        body.extend_from_slice(b"\r\n");
    }
    body.extend_from_slice(format!("--{boundary}--\r\n").as_bytes());
    (format!("multipart/form-data; boundary={boundary}"), body)
}

pub async fn send(app: &Router, request: Request<Body>) -> (StatusCode, Vec<u8>) {
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    (
        status,
        response.into_body().collect().await.unwrap().to_bytes().to_vec(),
    )
}

pub async fn get_json(app: &Router, uri: &str) -> (StatusCode, serde_json::Value) {
    let (status, body) = send(app, Request::get(uri).body(Body::empty()).unwrap()).await;
    (status, serde_json::from_slice(&body).unwrap())
}

pub async fn post_attempt(app: &Router, user: &str, sentence: &str, audio: &[u8]) -> (StatusCode, Vec<u8>) {
    let (content_type, body) = multipart(&[
        ("user_id", user.as_bytes()),
        ("sentence_id", sentence.as_bytes()),
        ("audio", audio),
    ]);
    let request = Request::post("/api/attempts")
        .header("content-type", content_type)
        .body(Body::from(body))
        .unwrap();
    send(app, request).await
}

pub fn store_lines(path: &Path) -> usize {
    std::fs::read_to_string(path).map(|s| s.lines().count()).unwrap_or(0)
}
