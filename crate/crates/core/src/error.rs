use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("ambiguous J character: eigenvector {index} has dominant J weight {weight:.3} < 0.5")]
    AmbiguousCharacter { index: usize, weight: f64 },
    #[error("data error: {0}")]
    Data(String),
    #[error("unmatched branch label {label:?} (available: {available})")]
    UnmatchedLabel { label: String, available: String },
    #[error("fit failed: {0}")]
    FitFailure(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
