use std::fmt;

/// Error type shared by all quantiser operations.
#[derive(Debug)]
pub enum Error {
    /// A vector had a different dimension than the codebook or dataset expects.
    DimensionMismatch { expected: usize, got: usize },
    /// A code index was outside `0..M`.
    IndexOutOfRange { index: usize, len: usize },
    /// A weight vector had (near-)zero norm where a direction is required,
    /// e.g. under the threshold or parallel constraint.
    DegenerateWeight { index: usize },
    /// An operation that averages over data received an empty dataset.
    EmptyDataset,
    /// A NaN or infinity appeared where a finite value is required. The string
    /// names the quantity that went non-finite.
    NonFinite(String),
    /// A configuration value was out of its documented range.
    InvalidConfig(String),
    /// A brute-force oracle was asked to enumerate an index space larger than
    /// its guard allows.
    OracleTooLarge { states: u128, limit: u128 },
    /// An oracle precondition on its probability tables was violated.
    ContractViolation(String),
    /// The zero vector has no defined nulling depth.
    ZeroVector,
    /// Underlying I/O failure while reading or writing an artifact.
    Io(std::io::Error),
    /// A serialized artifact had a bad magic number, version, or layout.
    Format(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::IndexOutOfRange { index, len } => {
                write!(f, "code index {index} out of range (codebook size {len})")
            }
            Error::DegenerateWeight { index } => {
                write!(f, "weight vector {index} has zero norm; direction undefined")
            }
            Error::EmptyDataset => write!(f, "operation requires a non-empty dataset"),
            Error::NonFinite(what) => write!(f, "non-finite value in {what}"),
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::OracleTooLarge { states, limit } => {
                write!(f, "oracle index space has {states} states (limit {limit})")
            }
            Error::ContractViolation(msg) => write!(f, "oracle contract violated: {msg}"),
            Error::ZeroVector => write!(f, "nulling depth undefined for the zero vector"),
            Error::Io(err) => write!(f, "i/o error: {err}"),
            Error::Format(msg) => write!(f, "format error: {msg}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(err) => Some(err),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err)
    }
}
