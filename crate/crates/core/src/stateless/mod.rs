//! The Stateless Ethereum health model: data ingest, bundle handling,
//! scenarios and calibration.

pub mod bundle;
pub mod calibrate;
pub mod discretize;
pub mod ingest;
pub mod scenario;

pub use bundle::{BundleFile, CalibrationTarget, ModelBundle, ScenarioPreset, TargetQuery};
pub use calibrate::{calibrate, CalibrationOptions, CalibrationReport};
pub use scenario::{run_scenario, ScenarioReport};
