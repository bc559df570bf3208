#![allow(dead_code)]

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::{json, Value};

pub fn root(path: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(path)
}

pub fn shipped() -> PathBuf {
    root("models/stateless-ethereum.oobn.json")
}

pub fn oobn_lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oobn-lab"))
        .args(args)
        .env_remove("OOBN_LAB_BUNDLE")
        .output()
        .expect("binary runs")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

/// Scratch file removed on drop.
pub struct Scratch(pub PathBuf);

impl Scratch {
    pub fn json(tag: &str, body: &Value) -> Self {
        let path = std::env::temp_dir().join(format!("oobn-lab-{tag}-{}.json", std::process::id()));
        std::fs::write(&path, serde_json::to_string_pretty(body).unwrap()).unwrap();
        Scratch(path)
    }

    pub fn path(&self) -> &str {
        self.0.to_str().unwrap()
    }
}

impl Drop for Scratch {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.0);
    }
}

/// `Rain -> Wet` with P(rain) = 0.3, P(wet | rain) = 0.9, P(wet | dry) = 0.2.
pub fn toy_bundle() -> Value {
    json!({
        "top": "Garden",
        "templates": {
            "Garden": {
                "privates": [
                    {"name": "Rain", "states": ["yes", "no"]},
                    {"name": "Wet", "states": ["yes", "no"]}
                ],
                "edges": [["Rain", "Wet"]],
                "cpts": {
                    "Rain": {"parents": [], "table": [[0.3, 0.7]], "provenance": "elicited"},
                    "Wet": {"parents": ["Rain"], "table": [[0.9, 0.1], [0.2, 0.8]], "provenance": "elicited"}
                }
            }
        },
        "presets": [{"name": "wet", "evidence": {"Wet": "yes"}}]
    })
}

pub fn shipped_json() -> Value {
    serde_json::from_str(&std::fs::read_to_string(shipped()).unwrap()).unwrap()
}
