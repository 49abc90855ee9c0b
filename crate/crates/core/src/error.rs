use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("inverse of zero is undefined in GF({0})")]
    ZeroInverse(u16),
    #[error("unsupported field order {0}; expected 2, 4, 16 or 256")]
    UnsupportedField(u32),
    #[error("coefficient length {got} does not match basis width {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("cannot combine rows of an empty basis")]
    EmptyBasis,
    #[error("basis has rank {rank} < {k}; not decodable")]
    NotDecodable { rank: usize, k: usize },
    #[error("basis carries no payloads")]
    NoPayload,
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("graph is disconnected after {0} attempts")]
    Disconnected(usize),
    #[error("malformed input at line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] IoError),
}

/// `std::io::Error` wrapper so `Error` can stay `Clone + PartialEq`.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{0}")]
pub struct IoError(pub String);

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(IoError(e.to_string()))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}
