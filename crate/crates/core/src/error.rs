use thiserror::Error;

pub type Result<T> = std::result::Result<T, FloorError>;

#[derive(Debug, Error)]
pub enum FloorError {
    #[error("unknown vertex {0}")]
    UnknownVertex(String),

    #[error("invalid diagram point: {0}")]
    InvalidPoint(String),

    #[error("diagram is disconnected")]
    Disconnected,

    #[error("self-loop at floor {0}")]
    SelfLoop(usize),

    #[error("edge {edge} has weight 0")]
    ZeroWeight { edge: usize },

    #[error("diagram too large: {0}")]
    TooLarge(String),

    #[error(
        "dimension condition fails: sum of l_j(n-1-j) is {lhs}, \
         but (n+1)d + (n-3)(1-g) is {rhs}"
    )]
    DimensionMismatch { lhs: i64, rhs: i64 },

    #[error("genus {g} is only supported in the plane (got n = {n})")]
    UnsupportedGenus { n: u32, g: u32 },

    #[error("unsupported ambient dimension n = {0}")]
    UnsupportedDimension(u32),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("floor {0} carries no marks")]
    UnmarkedFloor(usize),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("cache checksum mismatch")]
    ChecksumMismatch,

    #[error("malformed cache file: {0}")]
    CacheFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl FloorError {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        FloorError::Parse {
            line,
            msg: msg.into(),
        }
    }
}
