use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty reduction")]
    EmptyReduction,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid trellis: {0}")]
    InvalidTrellis(String),
    #[error("transition {transition} at step {step} carries posterior mass but no label")]
    UnlabeledTransition { step: usize, transition: usize },
    #[error("invalid channel parameters: {0}")]
    InvalidParams(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("extrinsic division by zero-probability at index {index}, entry {entry}")]
    ExtrinsicDivision { index: usize, entry: usize },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
