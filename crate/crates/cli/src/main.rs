use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use oobn_lab::report::{self, bundle_hash, parse_finding, render, Diagnostic, InferRequest, Precision, ScenarioRequest, SensitivityRequest};
use oobn_lab::service::{self, ServiceConfig};
use oobn_lab_core::stateless::calibrate::{calibrate, CalibrationOptions};
use oobn_lab_core::stateless::ingest::{read_block_witness_csv, to_dataset};
use oobn_lab_core::stateless::scenario::check_expectations;
use oobn_lab_core::stateless::ModelBundle;
use oobn_lab_core::{Error, Evidence};

/// Object-oriented Bayesian network toolkit.
#[derive(Parser)]
#[command(name = "oobn-lab", version)]
struct Cli {
    /// Number rounding in reports: decimal digits or `full`.
    #[arg(long, global = true, default_value = "6")]
    precision: Precision,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct BundleArg {
    /// Model bundle (defaults to $OOBN_LAB_BUNDLE).
    #[arg(long, env = "OOBN_LAB_BUNDLE")]
    bundle: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Check that a bundle loads and flattens.
    Validate(BundleArg),
    /// Posterior of every variable given evidence.
    Infer {
        #[command(flatten)]
        bundle: BundleArg,
        /// Finding VARIABLE=STATE (repeatable).
        #[arg(long = "evidence", short = 'e', value_parser = parse_finding)]
        evidence: Vec<(String, String)>,
    },
    /// Run a scenario preset and/or ad-hoc evidence.
    Scenario {
        #[command(flatten)]
        bundle: BundleArg,
        preset: Option<String>,
        #[arg(long = "evidence", short = 'e', value_parser = parse_finding)]
        evidence: Vec<(String, String)>,
        /// Preset to report changes against.
        #[arg(long)]
        compare: Option<String>,
    },
    /// Parameter and evidence sensitivity of a hypothesis.
    Sensitivity {
        #[command(flatten)]
        bundle: BundleArg,
        /// VARIABLE=STATE.
        #[arg(long)]
        hypothesis: String,
        /// Preset name, or `none`.
        #[arg(long, default_value = "none")]
        scenario: String,
        #[arg(long = "evidence", short = 'e', value_parser = parse_finding)]
        evidence: Vec<(String, String)>,
        /// Also report per-variable evidence sensitivity ranges.
        #[arg(long)]
        evidence_sensitivity: bool,
        /// Keep only the N most sensitive parameters.
        #[arg(long)]
        top: Option<usize>,
    },
    /// Re-estimate learned CPTs from block/witness measurements.
    Learn {
        #[command(flatten)]
        bundle: BundleArg,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        smoothing: f64,
    },
    /// Fit elicited CPT cells to the bundle's calibration targets.
    Calibrate {
        #[command(flatten)]
        bundle: BundleArg,
        #[arg(long)]
        out: PathBuf,
        /// Where to write the residual report (stdout if omitted).
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value_t = 200)]
        max_steps: usize,
    },
    /// Serve the HTTP API.
    Serve {
        #[command(flatten)]
        bundle: BundleArg,
        #[arg(long, default_value = "127.0.0.1")]
        bind: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
}

const VALIDATION_FAILURE: u8 = 1;
const USAGE_ERROR: u8 = 2;

fn fail(code: u8, diagnostic: Diagnostic) -> ExitCode {
    eprintln!("{}", diagnostic.line());
    ExitCode::from(code)
}

fn load(path: &Path) -> Result<ModelBundle, ExitCode> {
    ModelBundle::load(path).map_err(|e| fail(VALIDATION_FAILURE, Diagnostic::from(&e)))
}

fn evidence_of(pairs: Vec<(String, String)>) -> Result<Evidence, ExitCode> {
    let mut evidence = Evidence::new();
    for (k, v) in pairs {
        if evidence.insert(k.clone(), v).is_some() {
            return Err(fail(USAGE_ERROR, Diagnostic::new("DuplicateFinding", format!("`{k}` given twice"))));
        }
    }
    Ok(evidence)
}

fn emit<T: serde::Serialize>(result: oobn_lab_core::Result<T>, precision: Precision) -> ExitCode {
    match result {
        Ok(body) => {
            print!("{}", render(&body, precision));
            ExitCode::SUCCESS
        }
        Err(e) => fail(USAGE_ERROR, Diagnostic::from(&e)),
    }
}

fn validate(path: &Path) -> ExitCode {
    let bundle = match ModelBundle::load(path) {
        Ok(b) => b,
        Err(e) => {
            println!("{}", Diagnostic::from(&e).line());
            return ExitCode::from(VALIDATION_FAILURE);
        }
    };
    let mut problems = Vec::new();
    let net = bundle.network();
    for s in &bundle.metadata().sum_nodes {
        let flat = bundle.aliases().keys().chain(net.variables().iter().map(|v| &v.name)).find(|n| {
            n.rsplit('.').next() == Some(s.node.as_str()) && net.id(n).is_some()
        });
        if let Some(id) = flat.and_then(|n| net.id(n)) {
            if net.cpt(id).table.iter().any(|row| !row.contains(&1.0)) {
                problems.push(Diagnostic::new("SumNodeNotDeterministic", format!("`{}` has a row that is not a point mass", s.node)));
            }
        }
    }
    match check_expectations(&bundle) {
        Ok(checks) => {
            for c in checks.iter().filter(|c| !c.holds) {
                problems.push(Diagnostic::new(
                    "ExpectationViolated",
                    format!("{}: {} expected to {:?} relative to {} ({} vs {})", c.preset, c.headline, c.direction, c.relative_to, c.value, c.reference),
                ));
            }
        }
        Err(e) => problems.push(Diagnostic::from(&e)),
    }
    if problems.is_empty() {
        println!(
            "{}",
            serde_json::json!({
                "status": "ok",
                "model": bundle.oobn().top(),
                "model_hash": bundle_hash(&bundle),
                "templates": bundle.oobn().templates().count(),
                "variables": net.len(),
            })
        );
        ExitCode::SUCCESS
    } else {
        for p in &problems {
            println!("{}", p.line());
        }
        ExitCode::from(VALIDATION_FAILURE)
    }
}

fn run(cli: Cli) -> ExitCode {
    let precision = cli.precision;
    match cli.command {
        Command::Validate(b) => validate(&b.bundle),
        Command::Infer { bundle, evidence } => {
            let (bundle, evidence) = match (load(&bundle.bundle), evidence_of(evidence)) {
                (Ok(b), Ok(e)) => (b, e),
                (Err(c), _) | (_, Err(c)) => return c,
            };
            let request = InferRequest { model: None, evidence };
            emit(report::infer(&bundle, &bundle_hash(&bundle), &request), precision)
        }
        Command::Scenario { bundle, preset, evidence, compare } => {
            let (bundle, evidence) = match (load(&bundle.bundle), evidence_of(evidence)) {
                (Ok(b), Ok(e)) => (b, e),
                (Err(c), _) | (_, Err(c)) => return c,
            };
            emit(report::scenario(&bundle, &ScenarioRequest { preset, evidence, compare }), precision)
        }
        Command::Sensitivity { bundle, hypothesis, scenario, evidence, evidence_sensitivity, top } => {
            let (bundle, evidence) = match (load(&bundle.bundle), evidence_of(evidence)) {
                (Ok(b), Ok(e)) => (b, e),
                (Err(c), _) | (_, Err(c)) => return c,
            };
            let request = SensitivityRequest { hypothesis, scenario: Some(scenario), evidence, evidence_sensitivity, top };
            emit(report::sensitivity(&bundle, &request), precision)
        }
        Command::Learn { bundle, data, out, smoothing } => {
            let bundle = match load(&bundle.bundle) {
                Ok(b) => b,
                Err(c) => return c,
            };
            let learned = read_block_witness_csv(&data)
                .and_then(|raw| to_dataset(&raw, &bundle.binned_variables()))
                .and_then(|ds| {
                    let rows = ds.len();
                    let source = data.file_name().map_or_else(|| data.display().to_string(), |n| n.to_string_lossy().into_owned());
                    bundle.learn(&ds, smoothing, &source).map(|b| (b, rows))
                });
            match learned.and_then(|(b, rows)| b.save(&out).map(|_| rows)) {
                Ok(rows) => {
                    println!("{}", serde_json::json!({"status": "ok", "rows": rows, "out": out.display().to_string()}));
                    ExitCode::SUCCESS
                }
                Err(e) => fail(USAGE_ERROR, Diagnostic::from(&e)),
            }
        }
        Command::Calibrate { bundle, out, report, max_steps } => {
            let bundle = match load(&bundle.bundle) {
                Ok(b) => b,
                Err(c) => return c,
            };
            let options = CalibrationOptions { max_steps, ..CalibrationOptions::default() };
            let (calibrated, calibration) = match calibrate(&bundle, &options) {
                Ok(r) => r,
                Err(e) => return fail(USAGE_ERROR, Diagnostic::from(&e)),
            };
            if let Err(e) = calibrated.save(&out) {
                return fail(USAGE_ERROR, Diagnostic::from(&e));
            }
            let body = render(&calibration, precision);
            match report {
                Some(path) => {
                    if let Err(e) = std::fs::write(&path, body) {
                        return fail(USAGE_ERROR, Diagnostic::from(&Error::from(e)));
                    }
                }
                None => print!("{body}"),
            }
            for name in &calibration.infeasible {
                eprintln!("{}", Diagnostic::new("CalibrationFailed", format!("target `{name}` outside tolerance")).line());
            }
            ExitCode::SUCCESS
        }
        Command::Serve { bundle, bind, port } => {
            let config = ServiceConfig { bind, port, bundle_path: bundle.bundle, read_only: true, precision };
            let runtime = tokio::runtime::Runtime::new().expect("tokio runtime");
            match runtime.block_on(service::serve(config)) {
                Ok(()) => ExitCode::SUCCESS,
                Err(message) => fail(USAGE_ERROR, Diagnostic::new("ServeFailed", message)),
            }
        }
    }
}

fn main() -> ExitCode {
    run(Cli::parse())
}
