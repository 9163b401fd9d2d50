//! Drives the JSON API in-process: create a session, talk, inspect the
//! tree and the log.

use std::sync::Arc;

use argdialog::dialogue::{marriage_graph, Templates};
use argdialog::eval::{KeywordOracle, LexicalResolver};
use argdialog_service::http::router;
use argdialog_service::{Nlu, Pipeline, PipelineConfig, Service};
use axum::body::{to_bytes, Body};
use axum::http::{Method, Request};
use serde_json::Value;
use tower::ServiceExt;

async fn call(app: &axum::Router, method: Method, uri: &str, body: &str) -> Value {
    let req =
        Request::builder().method(&method).uri(uri).header("content-type", "application/json").body(Body::from(body.to_owned())).unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = to_bytes(res.into_body(), usize::MAX).await.unwrap();
    let v: Value = serde_json::from_slice(&bytes).unwrap();
    println!("{method} {uri} -> {status}");
    v
}

#[tokio::main]
async fn main() {
    let nlu = Nlu::new(Arc::new(KeywordOracle::default()), Arc::new(LexicalResolver), "keyword");
    let pipeline = Pipeline::new(vec![marriage_graph()], Templates::default(), Some(nlu), PipelineConfig::default()).unwrap();
    let app = router(Arc::new(Service::new(pipeline)));

    println!("{}", call(&app, Method::GET, "/health", "").await);
    let created = call(&app, Method::POST, "/sessions", r#"{"topic":"marriage"}"#).await;
    let id = created["session_id"].as_str().unwrap().to_owned();

    for text in [
        "What is my stance?",
        "Why do you say that marriage undermines same-sex couples?",
        "I agree that marriage is seen as the best way to raise children",
    ] {
        let body = serde_json::json!({ "text": text }).to_string();
        let reply = call(&app, Method::POST, &format!("/sessions/{id}/utterance"), &body).await;
        println!("  user: {text}\n  system: {}\n  intent {} stance {}", reply["response_text"], reply["intent"], reply["stance"]);
    }

    let tree = call(&app, Method::GET, &format!("/sessions/{id}/tree"), "").await;
    println!("  current {} with {} nodes", tree["current"], tree["nodes"].as_array().unwrap().len());
    let log = call(&app, Method::GET, &format!("/sessions/{id}/log"), "").await;
    println!("  {} logged turns", log.as_array().map_or(0, Vec::len));
    println!("{}", call(&app, Method::GET, "/sessions/nope", "").await);
}
