use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    // graph construction
    #[error("directed cycle through {0:?}")]
    CycleDetected(Vec<String>),
    #[error("CPT shape mismatch for `{variable}`: {detail}")]
    CptShapeMismatch { variable: String, detail: String },
    #[error("CPT row {row} of `{variable}` sums to {sum}")]
    RowNotNormalized { variable: String, row: usize, sum: f64 },
    #[error("dangling reference: {0}")]
    DanglingReference(String),
    #[error("invalid variable `{variable}`: {detail}")]
    InvalidVariable { variable: String, detail: String },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("unknown state `{state}` for variable `{variable}`")]
    UnknownState { variable: String, state: String },
    #[error("assignment is partial; missing {0:?}")]
    PartialAssignment(Vec<String>),
    #[error("variable sets overlap on {0:?}")]
    OverlappingSets(Vec<String>),

    // inference
    #[error("network has {0} variables, too large for enumeration")]
    TooLargeForEnumeration(usize),
    #[error("evidence has probability zero")]
    ZeroProbabilityEvidence,

    // oobn
    #[error("input node `{node}` of template `{template}` has a CPT")]
    InputHasCpt { template: String, node: String },
    #[error("node `{node}` of template `{template}` has no CPT")]
    OutputMissingCpt { template: String, node: String },
    #[error("unknown template `{0}`")]
    UnknownTemplateReference(String),
    #[error("template composition cycle through {0:?}")]
    TemplateCycle(Vec<String>),
    #[error("state signature mismatch binding `{provider}` to `{consumer}`: {provider_states:?} vs {consumer_states:?}")]
    SignatureMismatch {
        provider: String,
        consumer: String,
        provider_states: Vec<String>,
        consumer_states: Vec<String>,
    },
    #[error("input `{0}` is not bound")]
    UnboundInput(String),
    #[error("name collision on `{0}`")]
    NameCollision(String),
    #[error("input `{0}` has no stand-in prior")]
    MissingStandInPrior(String),
    #[error("invalid template `{template}`: {detail}")]
    InvalidTemplate { template: String, detail: String },

    // sensitivity
    #[error("row {row} of `{variable}` is degenerate: parameter is 1 and cannot be varied")]
    DegenerateRow { variable: String, row: usize },
    #[error("parameter value {0} outside [0, 1]")]
    ParameterOutOfRange(f64),
    #[error("hypothesis variable `{0}` is observed")]
    HypothesisObserved(String),

    // learning
    #[error("no data for row {row} of `{variable}` and smoothing is zero")]
    EmptyRowWithoutSmoothing { variable: String, row: usize },
    #[error("dataset: {0}")]
    Dataset(String),

    // stateless model / ingestion
    #[error("schema error: {0}")]
    SchemaError(String),
    #[error("bin boundaries are not strictly increasing: {0:?}")]
    NonMonotoneBins(Vec<f64>),
    #[error("unit mismatch: `{0}` vs `{1}`")]
    UnitMismatch(String, String),
    #[error("sum {sum} falls outside child bins of `{variable}`")]
    SumOutOfRange { variable: String, sum: f64 },
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("unparseable cell at row {row}, column `{column}`: {value:?}")]
    UnparseableCell { row: usize, column: String, value: String },
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable name of the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::CycleDetected(_) => "CycleDetected",
            Error::CptShapeMismatch { .. } => "CptShapeMismatch",
            Error::RowNotNormalized { .. } => "RowNotNormalized",
            Error::DanglingReference(_) => "DanglingReference",
            Error::InvalidVariable { .. } => "InvalidVariable",
            Error::UnknownVariable(_) => "UnknownVariable",
            Error::UnknownState { .. } => "UnknownState",
            Error::PartialAssignment(_) => "PartialAssignment",
            Error::OverlappingSets(_) => "OverlappingSets",
            Error::TooLargeForEnumeration(_) => "TooLargeForEnumeration",
            Error::ZeroProbabilityEvidence => "ZeroProbabilityEvidence",
            Error::InputHasCpt { .. } => "InputHasCpt",
            Error::OutputMissingCpt { .. } => "OutputMissingCpt",
            Error::UnknownTemplateReference(_) => "UnknownTemplateReference",
            Error::TemplateCycle(_) => "TemplateCycle",
            Error::SignatureMismatch { .. } => "SignatureMismatch",
            Error::UnboundInput(_) => "UnboundInput",
            Error::NameCollision(_) => "NameCollision",
            Error::MissingStandInPrior(_) => "MissingStandInPrior",
            Error::InvalidTemplate { .. } => "InvalidTemplate",
            Error::DegenerateRow { .. } => "DegenerateRow",
            Error::ParameterOutOfRange(_) => "ParameterOutOfRange",
            Error::HypothesisObserved(_) => "HypothesisObserved",
            Error::EmptyRowWithoutSmoothing { .. } => "EmptyRowWithoutSmoothing",
            Error::Dataset(_) => "Dataset",
            Error::SchemaError(_) => "SchemaError",
            Error::NonMonotoneBins(_) => "NonMonotoneBins",
            Error::UnitMismatch(..) => "UnitMismatch",
            Error::SumOutOfRange { .. } => "SumOutOfRange",
            Error::MissingColumn(_) => "MissingColumn",
            Error::UnparseableCell { .. } => "UnparseableCell",
            Error::UnknownPreset(_) => "UnknownPreset",
            Error::Io(_) => "Io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
