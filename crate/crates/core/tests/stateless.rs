use std::collections::BTreeSet;
use std::io::Write;

use oobn_lab_core::inference;
use oobn_lab_core::oobn::Provenance;
use oobn_lab_core::sensitivity::{sensitivity_function, ParameterRef};
use oobn_lab_core::stateless::calibrate::{calibrate, CalibrationOptions};
use oobn_lab_core::stateless::discretize::{discretize, BinSpec};
use oobn_lab_core::stateless::ingest::{ingest_block_witness_csv, read_block_witness_csv};
use oobn_lab_core::stateless::scenario::{check_expectations, compare, run_scenario};
use oobn_lab_core::stateless::{CalibrationTarget, ModelBundle, TargetQuery};
use oobn_lab_core::Evidence;

fn root(path: &str) -> String {
    format!("{}/../../{path}", env!("CARGO_MANIFEST_DIR"))
}

fn shipped() -> ModelBundle {
    ModelBundle::load(root("models/stateless-ethereum.oobn.json")).unwrap()
}

fn ev(pairs: &[(&str, &str)]) -> Evidence {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

const INVENTORY: [&str; 18] = [
    "EthereumEcosystem",
    "blockCreation.BlockCreationTime",
    "blockCreation.BlockGasLimit",
    "blockCreation.Difficulty",
    "blockCreation.StateEntriesUpdated",
    "blockCreation.TransactionsPerBlock",
    "blockPropagation.BlockAndWitnessProcessingTime",
    "blockPropagation.BlockPropagationTime",
    "blockPropagation.NodeKeepsUpWithHeadOfChain",
    "blockPropagation.NodeStatus",
    "blockPropagation.UncleRate",
    "ethereumNetwork.EthereumNodeType",
    "ethereumNetwork.NetworkLatency",
    "ethereumNetwork.NodeBandwidth",
    "ethereumNetwork.NodeLocation",
    "ethereumNetwork.PeerLocation",
    "witnessCreation.WitnessCreationTime",
    "witnessCreation.WitnessSize",
];

#[test]
fn shipped_bundle_matches_inventory() {
    let bundle = shipped();
    let net = bundle.network();
    let names: BTreeSet<&str> = net.variables().iter().map(|v| v.name.as_str()).collect();
    assert_eq!(names, INVENTORY.into_iter().collect());
    assert_eq!(net.topological_order().last().map(String::as_str), Some("EthereumEcosystem"));
    let states = |n: &str| net.variable(net.id(n).unwrap()).states.clone();
    assert_eq!(states("witnessCreation.WitnessSize"), ["small", "medium", "large", "veryLarge"]);
    assert_eq!(states("blockPropagation.NodeStatus"), ["upToDate", "syncing", "stateOffline"]);
    assert_eq!(states("blockPropagation.UncleRate"), ["low", "high"]);
    assert_eq!(states("ethereumNetwork.NodeLocation").len(), 5);
    // WitnessSize is private to the witness template
    for t in bundle.oobn().templates().filter(|t| t.name() != "WitnessCreation") {
        assert!(t.inputs().iter().chain(t.outputs()).all(|v| v.name != "WitnessSize"));
    }
    for v in ["Difficulty", "BlockCreationTime", "WitnessCreationTime", "WitnessSize", "BlockAndWitnessProcessingTime"] {
        assert!(bundle.metadata().bins.contains_key(v), "{v} has no bins");
    }
}

#[test]
fn every_cpt_has_a_provenance_and_sum_node_is_deterministic() {
    let bundle = shipped();
    for t in bundle.file().templates.values() {
        for cpt in t.cpts.values() {
            assert!(cpt.provenance.is_some());
        }
    }
    let net = bundle.network();
    let sum = net.cpt(net.id("blockPropagation.BlockAndWitnessProcessingTime").unwrap());
    assert!(sum.table.iter().all(|row| row.iter().filter(|&&p| p == 1.0).count() == 1));
    assert_eq!(
        bundle.provenance_of("blockPropagation.BlockAndWitnessProcessingTime"),
        Some(Provenance::Deterministic)
    );
    assert_eq!(bundle.provenance_of("witnessCreation.WitnessSize"), Some(Provenance::Learned));
}

#[test]
fn empty_and_malformed_bundles_are_schema_errors() {
    assert_eq!(ModelBundle::from_json("").unwrap_err().kind(), "SchemaError");
    assert_eq!(ModelBundle::from_json("{\"top\": 3}").unwrap_err().kind(), "SchemaError");
}

#[test]
fn four_state_bandwidth_is_a_signature_mismatch() {
    let bundle = shipped();
    let mut file = bundle.file().clone();
    let net = file.templates.get_mut("EthereumNetwork").unwrap();
    let bw = net.outputs.iter_mut().find(|v| v.name == "NodeBandwidth").unwrap();
    bw.states.push("veryHigh".into());
    for row in &mut net.cpts.get_mut("NodeBandwidth").unwrap().table {
        *row = vec![0.25; 4];
    }
    assert_eq!(ModelBundle::from_file(file).unwrap_err().kind(), "SignatureMismatch");
}

#[test]
fn sample_data_ingests_to_500_rows() {
    let bundle = shipped();
    let data = ingest_block_witness_csv(root("data/sample_blocks.csv"), &bundle.binned_variables()).unwrap();
    assert_eq!(data.len(), 500);
    assert_eq!(data.columns().len(), 7);
}

#[test]
fn witness_sizes_split_into_quartiles() {
    let raw = read_block_witness_csv(root("data/sample_blocks.csv")).unwrap();
    let spec = BinSpec::Quantiles { unit: "bytes".into(), levels: vec![0.25, 0.5, 0.75] };
    let d = discretize("witness_size_bytes", raw.column("witness_size_bytes").unwrap(), &spec).unwrap();
    assert_eq!(d.meta.bin_count(), 4);
    assert_eq!(d.meta.unit, "bytes");
    let mut counts = [0usize; 4];
    d.states.iter().for_each(|&s| counts[s] += 1);
    assert!(counts.iter().all(|&c| (124..=126).contains(&c)), "{counts:?}");
}

fn write_csv(body: &str) -> tempfile_path::TempCsv {
    tempfile_path::TempCsv::new(body)
}

mod tempfile_path {
    pub struct TempCsv(pub std::path::PathBuf);

    impl TempCsv {
        pub fn new(body: &str) -> Self {
            use std::sync::atomic::{AtomicUsize, Ordering};
            static N: AtomicUsize = AtomicUsize::new(0);
            let path = std::env::temp_dir().join(format!(
                "oobn-lab-{}-{}.csv",
                std::process::id(),
                N.fetch_add(1, Ordering::SeqCst)
            ));
            let mut f = std::fs::File::create(&path).unwrap();
            super::Write::write_all(&mut f, body.as_bytes()).unwrap();
            TempCsv(path)
        }
    }

    impl Drop for TempCsv {
        fn drop(&mut self) {
            let _ = std::fs::remove_file(&self.0);
        }
    }
}

#[test]
fn ingest_errors() {
    let header = "block_number,difficulty,gas_limit,tx_count,state_entries_updated,block_creation_time_s,witness_creation_time_s";
    let missing = write_csv(&format!("{header}\n1,2e15,1e7,100,900,10.0,1.0\n"));
    assert_eq!(read_block_witness_csv(&missing.0).unwrap_err().kind(), "MissingColumn");

    let header = "block_number,difficulty,gas_limit,tx_count,state_entries_updated,block_creation_time_s,witness_size_bytes,witness_creation_time_s";
    let negative = write_csv(&format!("{header}\n1,2e15,1e7,100,900,10.0,5000,1.0\n2,2e15,1e7,100,900,-3.0,5000,1.0\n"));
    match read_block_witness_csv(&negative.0).unwrap_err() {
        oobn_lab_core::Error::UnparseableCell { row, column, .. } => {
            assert_eq!((row, column.as_str()), (1, "block_creation_time_s"));
        }
        e => panic!("unexpected {e:?}"),
    }
    let blank = write_csv(&format!("{header}\n1,2e15,1e7,,900,10.0,5000,1.0\n"));
    assert_eq!(read_block_witness_csv(&blank.0).unwrap_err().kind(), "UnparseableCell");
}

#[test]
fn scenarios_report_headlines_and_monitors() {
    let bundle = shipped();
    let base = run_scenario(&bundle, Some("base"), &Evidence::new()).unwrap();
    assert_eq!(base.monitors.len(), 18);
    assert_eq!(base.probability_of_evidence, 1.0);
    assert!(base.headlines.contains_key("healthy") && base.headlines.contains_key("keeps_up"));
    let mut severe = run_scenario(&bundle, Some("severe-witness"), &Evidence::new()).unwrap();
    compare(&mut severe, &base, "base");
    let row = severe.comparison.as_ref().unwrap().rows.iter().find(|r| r.quantity == "keeps_up").unwrap();
    assert!(row.absolute_change < 0.0);
    assert!((row.relative_change.unwrap() - row.absolute_change / row.baseline).abs() < 1e-15);
    assert_eq!(run_scenario(&bundle, Some("nope"), &Evidence::new()).unwrap_err().kind(), "UnknownPreset");
    let contradiction = ev(&[
        ("BlockCreationTime", "high"),
        ("BlockAndWitnessProcessingTime", "low"),
    ]);
    assert_eq!(run_scenario(&bundle, None, &contradiction).unwrap_err().kind(), "ZeroProbabilityEvidence");
    assert!(check_expectations(&bundle).unwrap().iter().all(|c| c.holds));
}

#[test]
fn clamping_witness_time_low_never_hurts_keeping_up() {
    let bundle = shipped();
    let net = bundle.network();
    let keeps = |e: &Evidence| inference::marginal(net, "NodeKeepsUpWithHeadOfChain", e).unwrap().probability("yes").unwrap();
    let contexts = [
        ev(&[]),
        ev(&[("EthereumNodeType", "semiStateless")]),
        ev(&[("EthereumNodeType", "miner")]),
        ev(&[("BlockCreationTime", "high")]),
        ev(&[("NodeBandwidth", "low")]),
    ];
    for context in contexts {
        let mut clamped = context.clone();
        clamped.insert("WitnessCreationTime".into(), "low".into());
        let canonical = bundle.canonical_evidence(&context).unwrap();
        let clamped = bundle.canonical_evidence(&clamped).unwrap();
        assert!(keeps(&clamped) >= keeps(&canonical) - 1e-12, "{context:?}");
    }
}

fn single_target(bundle: &ModelBundle, value: f64) -> ModelBundle {
    let mut file = bundle.file().clone();
    file.calibration_targets = vec![CalibrationTarget {
        name: "healthy".into(),
        query: TargetQuery::Posterior { variable: "EthereumEcosystem".into(), state: "healthy".into() },
        scenario: None,
        evidence: Evidence::new(),
        value,
        tolerance: 0.001,
    }];
    ModelBundle::from_file(file).unwrap()
}

#[test]
fn calibration_fixed_point_leaves_bundle_unchanged() {
    let bundle = shipped();
    let current = inference::marginal(bundle.network(), "EthereumEcosystem", &Evidence::new())
        .unwrap()
        .probability("healthy")
        .unwrap();
    let target = single_target(&bundle, current);
    let (out, report) = calibrate(&target, &CalibrationOptions::default()).unwrap();
    assert_eq!(report.steps, 0);
    assert!(report.changes.is_empty());
    assert_eq!(out.network(), target.network());
}

#[test]
fn single_parameter_target_is_solved_in_one_step() {
    let bundle = single_target(&shipped(), 0.56);
    let parameter = ParameterRef::new(
        "EthereumEcosystem",
        &[("blockPropagation.NodeKeepsUpWithHeadOfChain", "yes"), ("blockPropagation.UncleRate", "high")],
        "healthy",
    );
    let f = sensitivity_function(bundle.network(), ("EthereumEcosystem", "healthy"), &Evidence::new(), &parameter).unwrap();
    let expected = f.solve(0.56).unwrap();
    assert!((0.0..=1.0).contains(&expected));
    assert!((expected - f.t0).abs() > 1e-6, "target already met");

    let options = CalibrationOptions { free_cells: Some([parameter.clone()].into()), ..CalibrationOptions::default() };
    let (out, report) = calibrate(&bundle, &options).unwrap();
    assert_eq!(report.steps, 1);
    assert_eq!(report.changes.len(), 1);
    assert_eq!(report.changes[0].parameter, parameter);
    assert!((report.changes[0].to - expected).abs() < 1e-9);
    let (v, r, s) = parameter.locate(out.network()).unwrap();
    assert!((out.network().cpt(v).table[r][s] - expected).abs() < 1e-9);
    let healthy = inference::marginal(out.network(), "EthereumEcosystem", &Evidence::new()).unwrap();
    assert!((healthy.probability("healthy").unwrap() - 0.56).abs() < 1e-9);
    // every other cell is untouched
    for (a, b) in bundle.network().cpts().iter().zip(out.network().cpts()) {
        if a.child != "EthereumEcosystem" {
            assert_eq!(a, b);
        }
    }
}

#[test]
fn calibration_only_touches_elicited_cells() {
    let bundle = shipped();
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(root("models/calibration-report.json")).unwrap()).unwrap();
    let learned = ModelBundle::load(root("models/stateless-ethereum.learned.oobn.json")).unwrap();
    for change in report["changes"].as_array().unwrap() {
        let node = change["node"].as_str().unwrap();
        let template = change["template"].as_str().unwrap();
        let before = learned.file().templates[template].cpts[node].provenance;
        assert_eq!(before, Some(Provenance::Elicited), "{template}.{node}");
    }
    for (name, t) in &bundle.file().templates {
        for (node, cpt) in &t.cpts {
            let before = &learned.file().templates[name].cpts[node];
            if matches!(before.provenance, Some(Provenance::Learned | Provenance::Deterministic)) {
                assert_eq!(cpt.table, before.table, "{name}.{node} changed");
                assert_eq!(cpt.provenance, before.provenance);
            }
        }
    }
}
