use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate denominator: {0}")]
    DegenerateDenominator(String),
    #[error("quadratic form is negative ({0:e}); covariance input is not positive semidefinite")]
    NegativeQuadraticForm(f64),
    #[error("alpha must lie strictly between 0 and 1, got {0}")]
    InvalidAlpha(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("sigma is zero; the one-sided test is undefined on a degenerate sample")]
    ZeroSigma,
    #[error("covariance matrix is not symmetric at ({row}, {col})")]
    AsymmetricCovariance { row: usize, col: usize },
    #[error("covariance matrix is not a valid indicator covariance: {0}")]
    InvalidCovariance(String),

    #[error("no records to audit")]
    EmptyInput,
    #[error("label presence is not uniform across records")]
    MixedLabelPresence,
    #[error("metric {0} requires labels but the table has none")]
    LabelsMissing(&'static str),
    #[error("reference group {0:?} does not occur in the records")]
    UnknownReferenceGroup(String),

    #[error("invalid cell distribution: {0}")]
    InvalidDistribution(String),
    #[error("degenerate distribution: {0}")]
    DegenerateDistribution(String),
    #[error("{discarded} of {resamples} bootstrap resamples had a zero denominator")]
    TooManyDegenerateResamples { discarded: usize, resamples: usize },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("input file is empty")]
    EmptyFile,
    #[error("row {row} has {found} fields, expected {expected}")]
    RaggedRow {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("malformed delimited input: {0}")]
    Csv(#[from] csv::Error),
    #[error("column {0:?} not found in header")]
    MissingColumn(String),
    #[error("row {row}: value {value:?} in column {column:?} cannot be mapped")]
    UnmappableValue {
        row: usize,
        column: String,
        value: String,
    },
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("digest mismatch for {preset}: expected {expected}, got {actual}")]
    DigestMismatch {
        preset: String,
        expected: String,
        actual: String,
    },
    #[error("network error fetching {url}: {message}")]
    NetworkError { url: String, message: String },
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("dataset {0:?} is not cached and offline mode is on")]
    NotCached(String),
    #[error("cannot read report {path}: {message}")]
    UnreadableReport { path: PathBuf, message: String },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short stable identifier, used in reports and by the C ABI.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DegenerateDenominator(_) => "DegenerateDenominator",
            Error::NegativeQuadraticForm(_) => "NegativeQuadraticForm",
            Error::InvalidAlpha(_) => "InvalidAlpha",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::ZeroSigma => "ZeroSigma",
            Error::AsymmetricCovariance { .. } => "AsymmetricCovariance",
            Error::InvalidCovariance(_) => "InvalidCovariance",
            Error::EmptyInput => "EmptyInput",
            Error::MixedLabelPresence => "MixedLabelPresence",
            Error::LabelsMissing(_) => "LabelsMissing",
            Error::UnknownReferenceGroup(_) => "UnknownReferenceGroup",
            Error::InvalidDistribution(_) => "InvalidDistribution",
            Error::DegenerateDistribution(_) => "DegenerateDistribution",
            Error::TooManyDegenerateResamples { .. } => "TooManyDegenerateResamples",
            Error::Io { .. } => "IoError",
            Error::EmptyFile => "EmptyFile",
            Error::RaggedRow { .. } => "RaggedRow",
            Error::Csv(_) => "MalformedInput",
            Error::MissingColumn(_) => "MissingColumn",
            Error::UnmappableValue { .. } => "UnmappableValue",
            Error::InvalidSchema(_) => "InvalidSchema",
            Error::DigestMismatch { .. } => "DigestMismatch",
            Error::NetworkError { .. } => "NetworkError",
            Error::UnknownPreset(_) => "UnknownPreset",
            Error::NotCached(_) => "NotCached",
            Error::UnreadableReport { .. } => "UnreadableReport",
            Error::Json(_) => "Json",
        }
    }

    /// True when the failure comes from the data itself (empty input, zero cells,
    /// unmappable values) rather than from how the tool was invoked.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::DegenerateDenominator(_)
                | Error::NegativeQuadraticForm(_)
                | Error::ZeroSigma
                | Error::EmptyInput
                | Error::MixedLabelPresence
                | Error::LabelsMissing(_)
                | Error::DegenerateDistribution(_)
                | Error::TooManyDegenerateResamples { .. }
                | Error::EmptyFile
                | Error::RaggedRow { .. }
                | Error::Csv(_)
                | Error::UnmappableValue { .. }
                | Error::DigestMismatch { .. }
        )
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
