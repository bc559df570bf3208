//! Writes the elicited starting point of the Stateless Ethereum bundle:
//! structure, bins, presets, calibration targets and uniform-leaning expert
//! priors. Learned CPTs are uniform placeholders until `oobn-lab learn` runs.
//!
//! Usage: cargo run -p oobn-lab-core --example make_elicited_bundle -- [out.json]

use std::collections::{BTreeMap, BTreeSet};

use oobn_lab_core::graph::{row_states, Evidence, Variable};
use oobn_lab_core::oobn::{Binding, InstanceSpec, Provenance, TemplateCpt, TemplateSpec};
use oobn_lab_core::sensitivity::ParameterRef;
use oobn_lab_core::stateless::bundle::{
    regenerate_sum_nodes, BundleFile, CalibrationTarget, Direction, Expectation, Headline, Metadata,
    ScenarioPreset, SensitivityReference, SumNode, TargetQuery,
};
use oobn_lab_core::stateless::discretize::BinMeta;
use oobn_lab_core::stateless::ModelBundle;

const LMH: [&str; 3] = ["low", "medium", "high"];
const REGIONS: [&str; 5] = ["europe", "northAmerica", "china", "restOfAsia", "restOfWorld"];

fn var(name: &str, states: &[&str]) -> Variable {
    Variable::new(name, states)
}

fn normalize(row: Vec<f64>) -> Vec<f64> {
    let s: f64 = row.iter().sum();
    row.into_iter().map(|x| x / s).collect()
}

/// Discretized bell over `k` ordinal states centred at `centre`.
fn ordinal_row(k: usize, centre: f64, width: f64) -> Vec<f64> {
    normalize((0..k).map(|i| (-((i as f64 - centre) / width).powi(2) / 2.0).exp() + 0.02).collect())
}

fn uniform(rows: usize, k: usize) -> Vec<Vec<f64>> {
    vec![vec![1.0 / k as f64; k]; rows]
}

struct Builder {
    spec: TemplateSpec,
}

impl Builder {
    fn new() -> Self {
        Builder { spec: TemplateSpec::default() }
    }

    fn cpt(&mut self, child: &str, parents: &[&str], table: Vec<Vec<f64>>, provenance: Provenance) -> &mut Self {
        for p in parents {
            self.spec.edges.push((p.to_string(), child.to_string()));
        }
        self.spec.cpts.insert(
            child.to_string(),
            TemplateCpt { parents: parents.iter().map(|s| s.to_string()).collect(), table, provenance: Some(provenance) },
        );
        self
    }

    /// Elicited CPT built row by row from the parents' state indices.
    fn elicit(&mut self, child: &str, parents: &[(&str, usize)], f: impl Fn(&[usize]) -> Vec<f64>) -> &mut Self {
        let cards: Vec<usize> = parents.iter().map(|(_, k)| *k).collect();
        let rows: usize = cards.iter().product();
        let table = (0..rows).map(|r| normalize(f(&row_states(&cards, r)))).collect();
        let names: Vec<&str> = parents.iter().map(|(n, _)| *n).collect();
        self.cpt(child, &names, table, Provenance::Elicited)
    }

    fn learned(&mut self, child: &str, k: usize, parents: &[(&str, usize)]) -> &mut Self {
        let rows = parents.iter().map(|(_, k)| k).product();
        let names: Vec<&str> = parents.iter().map(|(n, _)| *n).collect();
        self.cpt(child, &names, uniform(rows, k), Provenance::Learned)
    }
}

fn ethereum_network() -> TemplateSpec {
    let mut b = Builder::new();
    b.spec.outputs = vec![
        var("EthereumNodeType", &["miner", "semiStateless"]),
        var("NodeBandwidth", &LMH),
        var("NetworkLatency", &LMH),
    ];
    b.spec.privates = vec![var("NodeLocation", &REGIONS), var("PeerLocation", &REGIONS)];
    b.elicit("EthereumNodeType", &[], |_| vec![0.1, 0.9]);
    b.elicit("NodeLocation", &[("EthereumNodeType", 2)], |s| match s[0] {
        0 => vec![0.2, 0.15, 0.45, 0.1, 0.1],
        _ => vec![0.35, 0.3, 0.1, 0.15, 0.1],
    });
    b.elicit("PeerLocation", &[("NodeLocation", 5)], |s| {
        (0..5).map(|r| if r == s[0] { 0.4 } else { 0.15 }).collect()
    });
    b.elicit("NetworkLatency", &[("NodeLocation", 5), ("PeerLocation", 5)], |s| {
        if s[0] == s[1] {
            vec![0.6, 0.3, 0.1]
        } else if s[0] == 2 || s[1] == 2 {
            vec![0.1, 0.3, 0.6]
        } else {
            vec![0.25, 0.45, 0.3]
        }
    });
    b.elicit("NodeBandwidth", &[("EthereumNodeType", 2)], |s| match s[0] {
        0 => vec![0.05, 0.25, 0.7],
        _ => vec![0.3, 0.45, 0.25],
    });
    b.spec
}

fn block_creation() -> TemplateSpec {
    let mut b = Builder::new();
    b.spec.outputs = vec![var("Difficulty", &LMH), var("StateEntriesUpdated", &LMH), var("BlockCreationTime", &LMH)];
    b.spec.privates = vec![var("BlockGasLimit", &LMH), var("TransactionsPerBlock", &LMH)];
    b.learned("Difficulty", 3, &[])
        .learned("BlockGasLimit", 3, &[("Difficulty", 3)])
        .learned("TransactionsPerBlock", 3, &[("BlockGasLimit", 3)])
        .learned("StateEntriesUpdated", 3, &[("TransactionsPerBlock", 3)])
        .learned("BlockCreationTime", 3, &[("TransactionsPerBlock", 3), ("Difficulty", 3)]);
    b.spec
}

fn witness_creation() -> TemplateSpec {
    let mut b = Builder::new();
    b.spec.inputs = vec![var("Difficulty", &LMH), var("StateEntriesUpdated", &LMH)];
    b.spec.privates = vec![var("WitnessSize", &["small", "medium", "large", "veryLarge"])];
    b.spec.outputs = vec![var("WitnessCreationTime", &LMH)];
    b.learned("WitnessSize", 4, &[("Difficulty", 3), ("StateEntriesUpdated", 3)])
        .learned("WitnessCreationTime", 3, &[("WitnessSize", 4)]);
    for input in ["Difficulty", "StateEntriesUpdated"] {
        b.spec.standin_priors.insert(input.to_string(), vec![1.0 / 3.0; 3]);
    }
    b.spec
}

fn block_propagation() -> TemplateSpec {
    let mut b = Builder::new();
    b.spec.inputs = vec![
        var("BlockCreationTime", &LMH),
        var("WitnessCreationTime", &LMH),
        var("NodeBandwidth", &LMH),
        var("NetworkLatency", &LMH),
        var("EthereumNodeType", &["miner", "semiStateless"]),
    ];
    b.spec.privates = vec![
        var("BlockAndWitnessProcessingTime", &LMH),
        var("BlockPropagationTime", &LMH),
        var("NodeStatus", &["upToDate", "syncing", "stateOffline"]),
    ];
    b.spec.outputs = vec![var("UncleRate", &["low", "high"]), var("NodeKeepsUpWithHeadOfChain", &["yes", "no"])];
    b.cpt(
        "BlockAndWitnessProcessingTime",
        &["BlockCreationTime", "WitnessCreationTime"],
        uniform(9, 3),
        Provenance::Deterministic,
    );
    b.elicit(
        "BlockPropagationTime",
        &[("NodeBandwidth", 3), ("NetworkLatency", 3), ("BlockAndWitnessProcessingTime", 3)],
        |s| {
            // slower with low bandwidth, high latency and long processing
            let load = (2 - s[0]) as f64 * 0.5 + s[1] as f64 * 0.5 + s[2] as f64;
            ordinal_row(3, load / 2.0, 0.9)
        },
    );
    b.elicit("UncleRate", &[("BlockPropagationTime", 3)], |s| match s[0] {
        0 => vec![0.7, 0.3],
        1 => vec![0.5, 0.5],
        _ => vec![0.3, 0.7],
    });
    b.elicit("NodeStatus", &[("BlockPropagationTime", 3), ("EthereumNodeType", 2)], |s| {
        let base = match s[0] {
            0 => [0.75, 0.15, 0.1],
            1 => [0.55, 0.3, 0.15],
            _ => [0.3, 0.4, 0.3],
        };
        // semi-stateless nodes go offline more often when witnesses are missing
        let extra = if s[1] == 1 { 0.05 } else { 0.0 };
        vec![base[0] - extra, base[1], base[2] + extra]
    });
    b.elicit(
        "NodeKeepsUpWithHeadOfChain",
        &[("NodeStatus", 3), ("BlockAndWitnessProcessingTime", 3)],
        |s| {
            let yes = match s[0] {
                0 => [0.95, 0.85, 0.6][s[1]],
                1 => [0.5, 0.4, 0.25][s[1]],
                _ => [0.05, 0.03, 0.02][s[1]],
            };
            vec![yes, 1.0 - yes]
        },
    );
    for (input, prior) in [
        ("BlockCreationTime", vec![1.0 / 3.0; 3]),
        ("WitnessCreationTime", vec![1.0 / 3.0; 3]),
        ("NodeBandwidth", vec![1.0 / 3.0; 3]),
        ("NetworkLatency", vec![1.0 / 3.0; 3]),
        ("EthereumNodeType", vec![0.5, 0.5]),
    ] {
        b.spec.standin_priors.insert(input.to_string(), prior);
    }
    b.spec
}

fn top() -> TemplateSpec {
    let mut b = Builder::new();
    b.spec.outputs = vec![var("EthereumEcosystem", &["healthy", "unhealthy"])];
    b.spec.instances = [
        ("ethereumNetwork", "EthereumNetwork"),
        ("blockCreation", "BlockCreation"),
        ("witnessCreation", "WitnessCreation"),
        ("blockPropagation", "BlockPropagation"),
    ]
    .iter()
    .map(|(n, t)| InstanceSpec { name: n.to_string(), template: t.to_string() })
    .collect();
    b.spec.bindings = [
        ("witnessCreation", "Difficulty", "blockCreation.Difficulty"),
        ("witnessCreation", "StateEntriesUpdated", "blockCreation.StateEntriesUpdated"),
        ("blockPropagation", "BlockCreationTime", "blockCreation.BlockCreationTime"),
        ("blockPropagation", "WitnessCreationTime", "witnessCreation.WitnessCreationTime"),
        ("blockPropagation", "NodeBandwidth", "ethereumNetwork.NodeBandwidth"),
        ("blockPropagation", "NetworkLatency", "ethereumNetwork.NetworkLatency"),
        ("blockPropagation", "EthereumNodeType", "ethereumNetwork.EthereumNodeType"),
    ]
    .iter()
    .map(|(i, n, p)| Binding { instance: i.to_string(), input: n.to_string(), provider: p.to_string() })
    .collect();
    b.elicit(
        "EthereumEcosystem",
        &[("blockPropagation.NodeKeepsUpWithHeadOfChain", 2), ("blockPropagation.UncleRate", 2)],
        |s| {
            let healthy = [[0.95, 0.7], [0.05, 0.02]][s[0]][s[1]];
            vec![healthy, 1.0 - healthy]
        },
    );
    b.spec
}

fn bins() -> BTreeMap<String, BinMeta> {
    let meta = |unit: &str, cuts: &[f64], upper: Option<f64>| BinMeta::new(unit, 0.0, cuts, upper).unwrap();
    [
        ("Difficulty", meta("hashes", &[2.38e15, 2.48e15], None)),
        ("BlockGasLimit", meta("gas", &[1.234e7, 1.26e7], None)),
        ("TransactionsPerBlock", meta("transactions", &[150.0, 225.0], None)),
        ("StateEntriesUpdated", meta("entries", &[1300.0, 2000.0], None)),
        ("BlockCreationTime", meta("s", &[8.0, 18.0], Some(48.0))),
        ("WitnessCreationTime", meta("s", &[2.0, 5.0], Some(15.0))),
        ("WitnessSize", meta("bytes", &[450_000.0, 675_000.0, 1_400_000.0], None)),
        ("BlockAndWitnessProcessingTime", meta("s", &[10.0, 20.0], Some(60.0))),
        ("BlockPropagationTime", meta("s", &[2.0, 6.0], None)),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

fn evidence(pairs: &[(&str, &str)]) -> Evidence {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

fn presets() -> Vec<ScenarioPreset> {
    let expect = |headline: &str, direction, relative_to: &str| Expectation {
        headline: headline.to_string(),
        direction,
        relative_to: relative_to.to_string(),
    };
    vec![
        ScenarioPreset {
            name: "base".into(),
            description: "Basic stateless implementation, no evidence".into(),
            evidence: Evidence::new(),
            switch: None,
            expect: vec![],
        },
        ScenarioPreset {
            name: "no-witness".into(),
            description: "Witness generation disabled: witness creation time clamped to its minimal state".into(),
            evidence: evidence(&[("WitnessCreationTime", "low")]),
            switch: Some("witness-creation-disabled".into()),
            expect: vec![expect("healthy", Direction::Increase, "base")],
        },
        ScenarioPreset {
            name: "large-witness".into(),
            description: "Semi-stateless node receiving a large witness".into(),
            evidence: evidence(&[("EthereumNodeType", "semiStateless"), ("WitnessSize", "large")]),
            switch: None,
            expect: vec![expect("keeps_up", Direction::Decrease, "base")],
        },
        ScenarioPreset {
            name: "severe-witness".into(),
            description: "Semi-stateless node receiving a very large witness".into(),
            evidence: evidence(&[("EthereumNodeType", "semiStateless"), ("WitnessSize", "veryLarge")]),
            switch: None,
            expect: vec![
                expect("keeps_up", Direction::Decrease, "base"),
                expect("keeps_up", Direction::Decrease, "large-witness"),
            ],
        },
    ]
}

fn targets() -> Vec<CalibrationTarget> {
    let posterior = |name: &str, variable: &str, state: &str, scenario: Option<&str>, ev: &[(&str, &str)], value, tolerance| {
        CalibrationTarget {
            name: name.to_string(),
            query: TargetQuery::Posterior { variable: variable.to_string(), state: state.to_string() },
            scenario: scenario.map(str::to_string),
            evidence: evidence(ev),
            value,
            tolerance,
        }
    };
    let evidence_probability = |name: &str, scenario: Option<&str>, ev: &[(&str, &str)], value, tolerance| {
        CalibrationTarget {
            name: name.to_string(),
            query: TargetQuery::EvidenceProbability,
            scenario: scenario.map(str::to_string),
            evidence: evidence(ev),
            value,
            tolerance,
        }
    };
    let h = ("EthereumEcosystem", "healthy");
    let k = ("NodeKeepsUpWithHeadOfChain", "yes");
    vec![
        posterior("healthy | base", h.0, h.1, Some("base"), &[], 0.56, 0.02),
        posterior("healthy | no-witness", h.0, h.1, Some("no-witness"), &[], 0.60, 0.02),
        posterior("keeps up | base", k.0, k.1, Some("base"), &[], 0.65, 0.03),
        posterior("keeps up | large-witness", k.0, k.1, Some("large-witness"), &[], 0.58, 0.03),
        posterior("keeps up | severe-witness", k.0, k.1, Some("severe-witness"), &[], 0.54, 0.03),
        evidence_probability("P(large-witness evidence)", Some("large-witness"), &[], 0.237, 0.03),
        evidence_probability("P(severe-witness evidence)", Some("severe-witness"), &[], 0.059, 0.02),
        posterior("healthy | keeps up = no", h.0, h.1, None, &[("NodeKeepsUpWithHeadOfChain", "no")], 0.0337, 0.05),
        posterior("healthy | keeps up = yes", h.0, h.1, None, &[("NodeKeepsUpWithHeadOfChain", "yes")], 0.8439, 0.05),
        posterior("healthy | status = stateOffline", h.0, h.1, None, &[("NodeStatus", "stateOffline")], 0.0536, 0.05),
        posterior("healthy | status = upToDate", h.0, h.1, None, &[("NodeStatus", "upToDate")], 0.6764, 0.05),
        evidence_probability(
            "P(keeps up = yes, uncle rate = high)",
            None,
            &[("NodeKeepsUpWithHeadOfChain", "yes"), ("UncleRate", "high")],
            0.3285,
            0.05,
        ),
    ]
}

fn references() -> Vec<SensitivityReference> {
    let status = ParameterRef::new(
        "NodeStatus",
        &[("BlockPropagationTime", "low"), ("EthereumNodeType", "semiStateless")],
        "stateOffline",
    );
    vec![
        SensitivityReference {
            name: "no evidence: healthy | keeps up = yes, uncle rate = high".into(),
            scenario: None,
            hypothesis: ("EthereumEcosystem".into(), "healthy".into()),
            parameter: ParameterRef::new(
                "EthereumEcosystem",
                &[("NodeKeepsUpWithHeadOfChain", "yes"), ("UncleRate", "high")],
                "healthy",
            ),
            alpha: 0.3285,
            beta: 0.3318,
        },
        SensitivityReference {
            name: "large witness: stateOffline | low propagation time, semi-stateless".into(),
            scenario: Some("large-witness".into()),
            hypothesis: ("EthereumEcosystem".into(), "healthy".into()),
            parameter: status.clone(),
            alpha: -0.7301,
            beta: 0.8222,
        },
        SensitivityReference {
            name: "severe witness: stateOffline | low propagation time, semi-stateless".into(),
            scenario: Some("severe-witness".into()),
            hypothesis: ("EthereumEcosystem".into(), "healthy".into()),
            parameter: status,
            alpha: -0.4724,
            beta: 0.6123,
        },
    ]
}

fn main() {
    let out = std::env::args().nth(1).unwrap_or_else(|| "models/stateless-ethereum.elicited.oobn.json".into());
    let templates: BTreeMap<String, TemplateSpec> = [
        ("EthereumNetwork", ethereum_network()),
        ("BlockCreation", block_creation()),
        ("WitnessCreation", witness_creation()),
        ("BlockPropagation", block_propagation()),
        ("StatelessEthereum", top()),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    let ordinal: BTreeSet<String> = [
        "Difficulty",
        "BlockGasLimit",
        "TransactionsPerBlock",
        "StateEntriesUpdated",
        "BlockCreationTime",
        "WitnessSize",
        "WitnessCreationTime",
        "BlockAndWitnessProcessingTime",
        "BlockPropagationTime",
        "NodeBandwidth",
        "NetworkLatency",
        "UncleRate",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let mut file = BundleFile {
        templates,
        top: "StatelessEthereum".into(),
        metadata: Metadata {
            description: "Stateless Ethereum ecosystem health model".into(),
            bins: bins(),
            ordinal,
            sum_nodes: vec![SumNode {
                template: "BlockPropagation".into(),
                node: "BlockAndWitnessProcessingTime".into(),
                addends: ("BlockCreationTime".into(), "WitnessCreationTime".into()),
            }],
            headlines: vec![
                Headline { label: "healthy".into(), variable: "EthereumEcosystem".into(), state: "healthy".into() },
                Headline {
                    label: "keeps_up".into(),
                    variable: "NodeKeepsUpWithHeadOfChain".into(),
                    state: "yes".into(),
                },
            ],
            sensitivity_references: references(),
            learning: None,
        },
        presets: presets(),
        calibration_targets: targets(),
    };
    regenerate_sum_nodes(&mut file).expect("sum node bins are consistent");
    let bundle = ModelBundle::from_file(file).expect("elicited bundle is valid");
    bundle.save(&out).expect("write bundle");
    eprintln!("wrote {out} ({} variables)", bundle.network().len());
}
