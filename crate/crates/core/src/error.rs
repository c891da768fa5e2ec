use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("record {index}: weight must be positive and finite, got {weight}")]
    NonPositiveWeight { index: usize, weight: f64 },
}

#[derive(Debug, Error, PartialEq)]
pub enum WalkError {
    #[error("no candidate edges to sample from")]
    NoCandidates,
    #[error("probability vectors differ in length ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("invalid walk configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum SgnsError {
    #[error("vocabulary is empty after min-count filtering")]
    EmptyVocab,
    #[error("invalid skip-gram parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("need at least 2 edges to split, got {0}")]
    TooFewEdges(usize),
    #[error("train fraction must lie in (0, 1), got {0}")]
    InvalidSplit(f64),
    #[error("could only draw {found} of {requested} negative pairs")]
    InsufficientNegatives { requested: usize, found: usize },
    #[error("classifier needs samples of both classes")]
    SingleClass,
    #[error("{0} is undefined for this label set")]
    UndefinedMetric(&'static str),
    #[error("features and labels differ in shape")]
    ShapeMismatch,
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Sgns(#[from] SgnsError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("missing or malformed header, expected `from,to,value,timestamp[,txhash]`")]
    MissingHeader,
    #[error("malformed API response: {0}")]
    Json(String),
    #[error("API error (status {status}): {message}")]
    Api { status: String, message: String },
    #[error("transport failure: {0}")]
    Transport(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("infeasible synthetic configuration: {0}")]
    Infeasible(String),
}

/// Umbrella error used at the command-line boundary.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Sgns(#[from] SgnsError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Parse(String),
}

impl Error {
    /// Process exit code for this error's category:
    /// parse 2, io 3, api 4, math 5.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) => 2,
            Error::Ingest(IngestError::Csv { .. } | IngestError::MissingHeader | IngestError::Json(_)) => 2,
            Error::Graph(_) => 2,
            Error::Io(_) | Error::Ingest(IngestError::Io(_)) => 3,
            Error::Ingest(IngestError::Api { .. } | IngestError::Transport(_)) => 4,
            Error::Walk(_) | Error::Sgns(_) | Error::Eval(_) | Error::Synth(_) => 5,
        }
    }
}
