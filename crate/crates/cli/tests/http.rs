mod common;

use axum::body::{to_bytes, Body};
use axum::http::{Method, Request, StatusCode};
use common::*;
use oobn_lab::report::Precision;
use oobn_lab::service::{router, ServiceConfig};
use oobn_lab_core::stateless::ModelBundle;
use serde_json::Value;
use tower::ServiceExt;

async fn call(method: Method, uri: &str, body: &str) -> (StatusCode, String) {
    let bundle = ModelBundle::load(shipped()).unwrap();
    let request = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    let response = router(bundle, Precision::default()).oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = to_bytes(response.into_body(), usize::MAX).await.unwrap();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

async fn post(uri: &str, body: &str) -> (StatusCode, Value) {
    let (status, text) = call(Method::POST, uri, body).await;
    (status, serde_json::from_str(&text).unwrap())
}

#[tokio::test]
async fn empty_infer_returns_every_prior() {
    let (status, body) = post("/infer", "{}").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["probability_of_evidence"].as_f64(), Some(1.0));
    let posteriors = body["posteriors"].as_object().unwrap();
    assert_eq!(posteriors.len(), 18);
    for p in posteriors.values() {
        let total: f64 = p["distribution"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-5);
    }
    assert_eq!(body["model"], "StatelessEthereum");
}

#[tokio::test]
async fn contradictory_sum_evidence_is_unprocessable() {
    let body = r#"{"evidence": {"BlockCreationTime": "high", "BlockAndWitnessProcessingTime": "low"}}"#;
    let (status, d) = post("/infer", body).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(d["error"], "ZeroProbabilityEvidence");
}

#[tokio::test]
async fn malformed_requests_are_bad_requests() {
    for (uri, body) in [
        ("/infer", "{not json"),
        ("/infer", r#"{"evidence": {"NodeType": 3}}"#),
        ("/infer", r#"{"evidense": {}}"#),
        ("/scenario", "[1, 2]"),
        ("/sensitivity", "{}"),
        ("/sensitivity", r#"{"hypothesis": "EthereumEcosystem"}"#),
    ] {
        let (status, d) = post(uri, body).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{uri} {body}");
        assert!(d["error"].is_string());
    }
    let (status, d) = post("/infer", r#"{"evidence": {"EthereumEcosystem": "thriving"}}"#).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(d["error"], "UnknownState");
}

#[tokio::test]
async fn unknown_names_are_not_found() {
    let (status, d) = post("/scenario", r#"{"preset": "meltdown"}"#).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(d["error"], "UnknownPreset");
    let (status, d) = post("/infer", r#"{"evidence": {"Moon": "full"}}"#).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(d["error"], "UnknownVariable");
    let (status, _) = post("/infer", r#"{"model": "SomethingElse"}"#).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn model_and_health_describe_the_bundle() {
    let (status, text) = call(Method::GET, "/model", "").await;
    assert_eq!(status, StatusCode::OK);
    let model: Value = serde_json::from_str(&text).unwrap();
    let variables = model["variables"].as_array().unwrap();
    assert_eq!(variables.len(), 18);
    let ws = variables.iter().find(|v| v["name"] == "witnessCreation.WitnessSize").unwrap();
    assert_eq!(ws["group"], "witnessCreation");
    assert_eq!(ws["unit"], "bytes");
    assert_eq!(ws["boundaries"].as_array().unwrap().len(), 5);
    assert_eq!(model["presets"].as_array().unwrap().len(), 4);
    let (status, text) = call(Method::GET, "/health", "").await;
    assert_eq!(status, StatusCode::OK);
    let health: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(health["status"], "ok");
    assert_eq!(health["model_hash"], model["model_hash"]);
}

#[tokio::test]
async fn sensitivity_endpoint_ranks_parameters() {
    let (status, body) = post("/sensitivity", r#"{"hypothesis": "EthereumEcosystem=healthy", "scenario": "large-witness", "top": 5}"#).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["parameter_sensitivity"].as_array().unwrap().len(), 5);
    let ranges = body["evidence_sensitivity"].as_array().unwrap();
    assert!(ranges[0]["variable"].as_str().unwrap().ends_with("NodeKeepsUpWithHeadOfChain"));
}

#[tokio::test]
async fn scenario_output_matches_the_command_line() {
    let path = shipped();
    for (body, args) in [
        (r#"{"preset": "base"}"#, vec!["scenario", "base"]),
        (r#"{"preset": "severe-witness", "compare": "base"}"#, vec!["scenario", "severe-witness", "--compare", "base"]),
        (r#"{"evidence": {"NodeBandwidth": "low"}}"#, vec!["scenario", "-e", "NodeBandwidth=low"]),
    ] {
        let (status, http) = call(Method::POST, "/scenario", body).await;
        assert_eq!(status, StatusCode::OK);
        let mut full = args.clone();
        full.extend(["--bundle", path.to_str().unwrap()]);
        let cli = oobn_lab(&full);
        assert_eq!(cli.status.code(), Some(0));
        assert_eq!(http, stdout(&cli), "{body}");
    }
    let (_, http) = call(Method::POST, "/infer", r#"{"evidence": {"EthereumNodeType": "miner"}}"#).await;
    let cli = oobn_lab(&["infer", "--bundle", path.to_str().unwrap(), "-e", "EthereumNodeType=miner"]);
    assert_eq!(http, stdout(&cli));
}

#[test]
fn service_config_rejects_port_zero() {
    let mut config = ServiceConfig {
        bind: "127.0.0.1".into(),
        port: 0,
        bundle_path: shipped(),
        read_only: true,
        precision: Precision::default(),
    };
    assert!(config.address().is_err());
    config.port = 8080;
    assert_eq!(config.address().unwrap().port(), 8080);
    config.bind = "not an address".into();
    assert!(config.address().is_err());
}
