//! Scenario queries: headline probabilities and all monitors under the
//! evidence of a preset, optionally compared against a baseline.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Evidence;
use crate::inference::{self, Posterior};

use super::bundle::{Direction, ModelBundle};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub quantity: String,
    pub baseline: f64,
    pub value: f64,
    pub absolute_change: f64,
    /// `None` when the baseline is zero.
    pub relative_change: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub baseline: String,
    pub rows: Vec<ComparisonRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: Option<String>,
    pub evidence: Evidence,
    pub probability_of_evidence: f64,
    /// Headline label to `P(variable = state | evidence)`.
    pub headlines: BTreeMap<String, f64>,
    pub monitors: BTreeMap<String, Posterior>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<Comparison>,
}

/// Runs a preset (or no preset) with optional extra evidence.
pub fn run_scenario(bundle: &ModelBundle, preset: Option<&str>, extra: &Evidence) -> Result<ScenarioReport> {
    let evidence = bundle.scenario_evidence(preset, extra)?;
    let net = bundle.network();
    let probability_of_evidence = inference::probability_of_evidence(net, &evidence)?;
    let monitors = inference::posterior_all(net, &evidence)?;
    let mut headlines = BTreeMap::new();
    for h in &bundle.metadata().headlines {
        let name = net.name(net.resolve(&h.variable)?);
        let p = monitors[name].probability(&h.state).ok_or_else(|| Error::UnknownState {
            variable: h.variable.clone(),
            state: h.state.clone(),
        })?;
        headlines.insert(h.label.clone(), p);
    }
    Ok(ScenarioReport {
        scenario: preset.map(str::to_string),
        evidence,
        probability_of_evidence,
        headlines,
        monitors,
        comparison: None,
    })
}

/// Attaches per-headline changes relative to `baseline`.
pub fn compare(report: &mut ScenarioReport, baseline: &ScenarioReport, baseline_name: &str) {
    let mut rows: Vec<ComparisonRow> = report
        .headlines
        .iter()
        .filter_map(|(label, &value)| {
            let base = *baseline.headlines.get(label)?;
            Some(row(label, base, value))
        })
        .collect();
    rows.push(row("probability_of_evidence", baseline.probability_of_evidence, report.probability_of_evidence));
    report.comparison = Some(Comparison { baseline: baseline_name.to_string(), rows });
}

fn row(quantity: &str, baseline: f64, value: f64) -> ComparisonRow {
    ComparisonRow {
        quantity: quantity.to_string(),
        baseline,
        value,
        absolute_change: value - baseline,
        relative_change: (baseline != 0.0).then(|| (value - baseline) / baseline),
    }
}

/// Outcome of one declared preset expectation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectationCheck {
    pub preset: String,
    pub headline: String,
    pub direction: Direction,
    pub relative_to: String,
    pub value: f64,
    pub reference: f64,
    pub holds: bool,
}

/// Evaluates every `expect` entry of every preset.
pub fn check_expectations(bundle: &ModelBundle) -> Result<Vec<ExpectationCheck>> {
    let mut cache: BTreeMap<String, ScenarioReport> = BTreeMap::new();
    let mut get = |name: &str| -> Result<ScenarioReport> {
        if let Some(r) = cache.get(name) {
            return Ok(r.clone());
        }
        let r = run_scenario(bundle, Some(name), &Evidence::new())?;
        cache.insert(name.to_string(), r.clone());
        Ok(r)
    };
    let mut out = Vec::new();
    for preset in bundle.presets() {
        for e in &preset.expect {
            let here = get(&preset.name)?;
            let there = get(&e.relative_to)?;
            let missing = || Error::SchemaError(format!("unknown headline `{}`", e.headline));
            let value = *here.headlines.get(&e.headline).ok_or_else(missing)?;
            let reference = *there.headlines.get(&e.headline).ok_or_else(missing)?;
            let holds = match e.direction {
                Direction::Increase => value > reference,
                Direction::Decrease => value < reference,
            };
            out.push(ExpectationCheck {
                preset: preset.name.clone(),
                headline: e.headline.clone(),
                direction: e.direction,
                relative_to: e.relative_to.clone(),
                value,
                reference,
                holds,
            });
        }
    }
    Ok(out)
}
