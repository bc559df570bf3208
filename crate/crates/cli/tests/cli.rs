mod common;

use common::*;
use serde_json::Value;

fn diagnostic(line: &str) -> Value {
    serde_json::from_str(line.lines().next().unwrap()).unwrap()
}

#[test]
fn validate_accepts_the_shipped_bundle() {
    let out = oobn_lab(&["validate", "--bundle", shipped().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let summary = diagnostic(&stdout(&out));
    assert_eq!(summary["status"], "ok");
    assert_eq!(summary["variables"], 18);
    assert_eq!(summary["templates"], 5);
    assert_eq!(summary["model_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn validate_reports_a_cycle() {
    let mut bundle = toy_bundle();
    let garden = &mut bundle["templates"]["Garden"];
    garden["edges"] = serde_json::json!([["Rain", "Wet"], ["Wet", "Rain"]]);
    garden["cpts"]["Rain"] = serde_json::json!({"parents": ["Wet"], "table": [[0.5, 0.5], [0.5, 0.5]], "provenance": "elicited"});
    let file = Scratch::json("cycle", &bundle);
    let out = oobn_lab(&["validate", "--bundle", file.path()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(diagnostic(&stdout(&out))["error"], "CycleDetected");
}

#[test]
fn validate_reports_an_unnormalized_row() {
    let mut bundle = toy_bundle();
    bundle["templates"]["Garden"]["cpts"]["Wet"]["table"][1] = serde_json::json!([0.2, 0.7]);
    let file = Scratch::json("unnormalized", &bundle);
    let out = oobn_lab(&["validate", "--bundle", file.path()]);
    assert_eq!(out.status.code(), Some(1));
    let d = diagnostic(&stdout(&out));
    assert_eq!(d["error"], "RowNotNormalized");
    assert!(d["message"].as_str().unwrap().contains("Wet"));
}

#[test]
fn validate_reports_a_missing_file() {
    let out = oobn_lab(&["validate", "--bundle", "/nonexistent/bundle.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_preset_is_a_usage_error() {
    let out = oobn_lab(&["scenario", "--bundle", shipped().to_str().unwrap(), "no-such-preset"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).is_empty());
    assert_eq!(diagnostic(&stderr(&out))["error"], "UnknownPreset");
}

#[test]
fn bad_finding_syntax_is_a_usage_error() {
    let out = oobn_lab(&["infer", "--bundle", shipped().to_str().unwrap(), "-e", "EthereumEcosystem"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn observed_variable_is_a_point_mass() {
    let out = oobn_lab(&[
        "infer",
        "--bundle",
        shipped().to_str().unwrap(),
        "--evidence",
        "EthereumEcosystem=healthy",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let body: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(body["evidence"]["EthereumEcosystem"], "healthy");
    let p = &body["posteriors"]["EthereumEcosystem"]["distribution"];
    assert_eq!(p[0].as_f64(), Some(1.0));
    assert_eq!(p[1].as_f64(), Some(0.0));
    assert_eq!(body["posteriors"].as_object().unwrap().len(), 18);
    let pe = body["probability_of_evidence"].as_f64().unwrap();
    assert!(pe > 0.0 && pe < 1.0);
}

#[test]
fn bundle_can_come_from_the_environment() {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_oobn-lab"))
        .args(["scenario", "base"])
        .env("OOBN_LAB_BUNDLE", shipped())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn toy_sensitivity_matches_hand_derivatives() {
    let file = Scratch::json("toy-sensitivity", &toy_bundle());
    let out = oobn_lab(&[
        "--precision",
        "full",
        "sensitivity",
        "--bundle",
        file.path(),
        "--hypothesis",
        "Rain=yes",
        "--scenario",
        "wet",
        "--evidence-sensitivity",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let body: Value = serde_json::from_str(&stdout(&out)).unwrap();
    // P(rain | wet) = 0.27 / 0.41
    assert!((body["posterior"].as_f64().unwrap() - 0.27 / 0.41).abs() < 1e-12);
    let pe2 = 0.41f64 * 0.41;
    let cell = |e: &Value| {
        let parent = e["parameter"]["parent_configuration"]["Rain"].as_str().unwrap_or("-").to_string();
        (e["parameter"]["variable"].as_str().unwrap().to_string(), parent)
    };
    let expected = |var: &str, parent: &str| match (var, parent) {
        ("Rain", "-") => 0.18 / pe2,
        ("Wet", "yes") => 0.042 / pe2,
        ("Wet", "no") => 0.27 * 0.7 / pe2,
        other => panic!("unexpected cell {other:?}"),
    };
    let entries = body["parameter_sensitivity"].as_array().unwrap();
    assert_eq!(entries.len(), 6);
    let values: Vec<f64> = entries.iter().map(|e| e["sensitivity_value"].as_f64().unwrap()).collect();
    assert!(values.windows(2).all(|w| w[0] >= w[1]));
    for entry in entries {
        let (var, parent) = cell(entry);
        assert!((entry["sensitivity_value"].as_f64().unwrap() - expected(&var, &parent)).abs() < 1e-9, "{entry}");
        let (a, b, g, d, t0) = ["alpha", "beta", "gamma", "delta", "t0"]
            .map(|k| entry[k].as_f64().unwrap())
            .into();
        assert!(((a * t0 + b) / (g * t0 + d) - 0.27 / 0.41).abs() < 1e-12);
    }
    // P(Wet = yes | Rain = no) moves P(rain | wet) downwards
    let dry = entries.iter().find(|e| e["parameter"]["parent_configuration"]["Rain"] == "no" && e["parameter"]["state"] == "yes").unwrap();
    let (a, b, g, d, t0) = ["alpha", "beta", "gamma", "delta", "t0"].map(|k| dry[k].as_f64().unwrap()).into();
    assert!(((a * d - b * g) / (g * t0 + d).powi(2) + 0.27 * 0.7 / pe2).abs() < 1e-9);
    let ranges = body["evidence_sensitivity"].as_array().unwrap();
    assert!(ranges.is_empty() || ranges.iter().all(|r| r["variable"] != "Rain"));
}

#[test]
fn toy_sensitivity_without_evidence_is_linear() {
    let file = Scratch::json("toy-linear", &toy_bundle());
    let out = oobn_lab(&["--precision", "full", "sensitivity", "--bundle", file.path(), "--hypothesis", "Wet=yes", "--top", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let body: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let entries = body["parameter_sensitivity"].as_array().unwrap();
    assert_eq!(entries.len(), 2);
    for e in entries {
        assert_eq!(e["gamma"].as_f64(), Some(0.0));
        assert_eq!(e["delta"].as_f64(), Some(1.0));
        // d P(wet) / d P(rain) = 0.9 - 0.2
        assert!((e["sensitivity_value"].as_f64().unwrap() - 0.7).abs() < 1e-12);
    }
}

#[test]
fn observed_hypothesis_is_rejected() {
    let out = oobn_lab(&[
        "sensitivity",
        "--bundle",
        shipped().to_str().unwrap(),
        "--hypothesis",
        "EthereumEcosystem=healthy",
        "-e",
        "EthereumEcosystem=healthy",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(diagnostic(&stderr(&out))["error"], "HypothesisObserved");
}

#[test]
fn severe_witness_loses_about_a_sixth_of_keeping_up() {
    let out = oobn_lab(&["scenario", "--bundle", shipped().to_str().unwrap(), "severe-witness", "--compare", "base"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let body: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let rows = body["comparison"]["rows"].as_array().unwrap();
    let keeps = rows.iter().find(|r| r["quantity"] == "keeps_up").unwrap();
    let relative = keeps["relative_change"].as_f64().unwrap();
    assert!((-0.20..=-0.15).contains(&relative), "{relative}");
    assert_eq!(body["comparison"]["baseline"], "base");
}

#[test]
fn precision_flag_rounds_numbers() {
    let bundle = shipped();
    let out = oobn_lab(&["--precision", "2", "scenario", "--bundle", bundle.to_str().unwrap(), "base"]);
    let body: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let h = body["headlines"]["healthy"].as_f64().unwrap();
    assert_eq!((h * 100.0).round() / 100.0, h);
    assert_eq!(oobn_lab(&["--precision", "bogus", "validate", "--bundle", bundle.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn learn_then_calibrate_on_the_toy_bundle() {
    let file = Scratch::json("toy-calibrate", &{
        let mut b = toy_bundle();
        b["calibration_targets"] = serde_json::json!([
            {"name": "wet", "kind": "posterior", "variable": "Wet", "state": "yes", "value": 0.5, "tolerance": 0.01}
        ]);
        b
    });
    let out_path = std::env::temp_dir().join(format!("oobn-lab-toy-calibrated-{}.json", std::process::id()));
    let out = oobn_lab(&["calibrate", "--bundle", file.path(), "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["converged"], true);
    assert!(report["targets"][0]["within_tolerance"].as_bool().unwrap());
    let check = oobn_lab(&["infer", "--bundle", out_path.to_str().unwrap()]);
    let body: Value = serde_json::from_str(&stdout(&check)).unwrap();
    let wet = body["posteriors"]["Wet"]["distribution"][0].as_f64().unwrap();
    assert!((wet - 0.5).abs() <= 0.01);
    let _ = std::fs::remove_file(out_path);
}
