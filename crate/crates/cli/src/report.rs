//! Report bodies shared by the command line and the HTTP service.

use std::collections::BTreeMap;

use oobn_lab_core::inference::{self, Posterior};
use oobn_lab_core::sensitivity::{evidence_sensitivity_ranges, rank_parameters, EvidenceSensitivityRange, ParameterRef};
use oobn_lab_core::stateless::scenario::{compare, run_scenario};
use oobn_lab_core::stateless::ModelBundle;
use oobn_lab_core::{Error, Evidence, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Decimal digits kept in numbers, or `None` for full precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Precision(pub Option<u32>);

impl Default for Precision {
    fn default() -> Self {
        Precision(Some(6))
    }
}

impl std::str::FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "full" {
            return Ok(Precision(None));
        }
        s.parse::<u32>()
            .ok()
            .filter(|d| *d <= 15)
            .map(|d| Precision(Some(d)))
            .ok_or_else(|| format!("precision must be `full` or 0..=15, got `{s}`"))
    }
}

fn round_value(v: &mut Value, digits: u32) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(0.0);
            let scale = 10f64.powi(digits as i32);
            let mut r = (x * scale).round() / scale;
            if r == 0.0 {
                r = 0.0;
            }
            *v = serde_json::Number::from_f64(r).map_or(Value::Null, Value::Number);
        }
        Value::Array(items) => items.iter_mut().for_each(|i| round_value(i, digits)),
        Value::Object(map) => map.values_mut().for_each(|i| round_value(i, digits)),
        _ => {}
    }
}

/// Pretty JSON with a trailing newline, numbers rounded per `precision`.
pub fn render<T: Serialize>(body: &T, precision: Precision) -> String {
    let mut value = serde_json::to_value(body).expect("report serializes");
    if let Some(digits) = precision.0 {
        round_value(&mut value, digits);
    }
    let mut s = serde_json::to_string_pretty(&value).expect("value serializes");
    s.push('\n');
    s
}

/// Hex SHA-256 of the bundle's canonical serialization.
pub fn bundle_hash(bundle: &ModelBundle) -> String {
    format!("{:x}", Sha256::digest(bundle.to_json().as_bytes()))
}

/// Machine-readable error line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub error: String,
    pub message: String,
}

impl Diagnostic {
    pub fn new(kind: &str, message: impl Into<String>) -> Self {
        Diagnostic { error: kind.to_string(), message: message.into() }
    }

    pub fn line(&self) -> String {
        serde_json::to_string(self).expect("diagnostic serializes")
    }
}

impl From<&Error> for Diagnostic {
    fn from(e: &Error) -> Self {
        Diagnostic::new(e.kind(), e.to_string())
    }
}

/// Parses `Variable=state`.
pub fn parse_finding(s: &str) -> std::result::Result<(String, String), String> {
    match s.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() && !v.trim().is_empty() => {
            Ok((k.trim().to_string(), v.trim().to_string()))
        }
        _ => Err(format!("expected VARIABLE=STATE, got `{s}`")),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InferRequest {
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default)]
    pub evidence: Evidence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferResponse {
    pub model: String,
    pub model_hash: String,
    pub evidence: Evidence,
    pub probability_of_evidence: f64,
    pub posteriors: BTreeMap<String, Posterior>,
}

pub fn infer(bundle: &ModelBundle, hash: &str, request: &InferRequest) -> Result<InferResponse> {
    if let Some(model) = &request.model {
        if model != bundle.oobn().top() && model != hash {
            return Err(Error::UnknownTemplateReference(model.clone()));
        }
    }
    let evidence = bundle.canonical_evidence(&request.evidence)?;
    let net = bundle.network();
    Ok(InferResponse {
        model: bundle.oobn().top().to_string(),
        model_hash: hash.to_string(),
        evidence: request.evidence.clone(),
        probability_of_evidence: inference::probability_of_evidence(net, &evidence)?,
        posteriors: inference::posterior_all(net, &evidence)?,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioRequest {
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub evidence: Evidence,
    #[serde(default)]
    pub compare: Option<String>,
}

pub fn scenario(bundle: &ModelBundle, request: &ScenarioRequest) -> Result<Value> {
    let mut report = run_scenario(bundle, request.preset.as_deref(), &request.evidence)?;
    if let Some(baseline) = &request.compare {
        let base = run_scenario(bundle, Some(baseline), &Evidence::new())?;
        compare(&mut report, &base, baseline);
    }
    Ok(serde_json::to_value(report).expect("report serializes"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivityRequest {
    /// `Variable=state`.
    pub hypothesis: String,
    #[serde(default)]
    pub scenario: Option<String>,
    #[serde(default)]
    pub evidence: Evidence,
    #[serde(default = "yes")]
    pub evidence_sensitivity: bool,
    #[serde(default)]
    pub top: Option<usize>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterEntry {
    pub parameter: ParameterRef,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub t0: f64,
    pub f_t0: f64,
    pub sensitivity_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub hypothesis: (String, String),
    pub scenario: Option<String>,
    pub evidence: Evidence,
    pub posterior: f64,
    pub parameter_sensitivity: Vec<ParameterEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evidence_sensitivity: Option<Vec<EvidenceSensitivityRange>>,
}

pub fn sensitivity(bundle: &ModelBundle, request: &SensitivityRequest) -> Result<SensitivityReport> {
    let (variable, state) = parse_finding(&request.hypothesis).map_err(Error::SchemaError)?;
    let preset = request.scenario.as_deref().filter(|s| *s != "none");
    let evidence = bundle.scenario_evidence(preset, &request.evidence)?;
    let net = bundle.network();
    let h = net.resolve(&variable)?;
    let hypothesis = (net.name(h).to_string(), state);
    let posterior = inference::marginal(net, &hypothesis.0, &evidence)?
        .probability(&hypothesis.1)
        .ok_or_else(|| Error::UnknownState { variable: hypothesis.0.clone(), state: hypothesis.1.clone() })?;
    let mut ranked = rank_parameters(net, (&hypothesis.0, &hypothesis.1), &evidence, None)?;
    if let Some(top) = request.top {
        ranked.truncate(top);
    }
    let parameter_sensitivity = ranked
        .into_iter()
        .map(|r| ParameterEntry {
            alpha: r.function.alpha,
            beta: r.function.beta,
            gamma: r.function.gamma,
            delta: r.function.delta,
            t0: r.function.t0,
            f_t0: r.function.at_t0(),
            sensitivity_value: r.sensitivity_value,
            parameter: r.parameter,
        })
        .collect();
    let evidence_sensitivity = if request.evidence_sensitivity {
        Some(evidence_sensitivity_ranges(net, (&hypothesis.0, &hypothesis.1), &evidence)?)
    } else {
        None
    };
    Ok(SensitivityReport {
        scenario: preset.map(str::to_string),
        hypothesis,
        evidence,
        posterior,
        parameter_sensitivity,
        evidence_sensitivity,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableSummary {
    pub name: String,
    pub states: Vec<String>,
    pub parents: Vec<String>,
    /// Instance path of the defining sub-model, empty for the top level.
    pub group: String,
    pub ordinal: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundaries: Option<Vec<Option<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresetSummary {
    pub name: String,
    pub description: String,
    pub evidence: Evidence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model: String,
    pub model_hash: String,
    pub variables: Vec<VariableSummary>,
    pub presets: Vec<PresetSummary>,
    pub headlines: Vec<(String, String, String)>,
}

pub fn model_summary(bundle: &ModelBundle, hash: &str) -> ModelSummary {
    let net = bundle.network();
    let meta = bundle.metadata();
    let variables = net
        .topological_order()
        .into_iter()
        .map(|name| {
            let id = net.id(&name).expect("listed variable exists");
            let local = name.rsplit('.').next().unwrap_or(&name).to_string();
            let group = name.rsplit_once('.').map(|(g, _)| g.to_string()).unwrap_or_default();
            let bins = meta.bins.get(&local);
            VariableSummary {
                states: net.variable(id).states.clone(),
                parents: net.parents(id).iter().map(|&p| net.name(p).to_string()).collect(),
                group,
                ordinal: meta.ordinal.contains(&local),
                unit: bins.map(|b| b.unit.clone()),
                boundaries: bins.map(|b| {
                    b.boundaries().into_iter().map(|x| x.is_finite().then_some(x)).collect()
                }),
                name,
            }
        })
        .collect();
    ModelSummary {
        model: bundle.oobn().top().to_string(),
        model_hash: hash.to_string(),
        variables,
        presets: bundle
            .presets()
            .iter()
            .map(|p| PresetSummary { name: p.name.clone(), description: p.description.clone(), evidence: p.evidence.clone() })
            .collect(),
        headlines: meta
            .headlines
            .iter()
            .map(|h| (h.label.clone(), h.variable.clone(), h.state.clone()))
            .collect(),
    }
}
