use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter constraint violated: {0}")]
    ConstraintViolation(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("time mismatch: {a} vs {b}")]
    TimeMismatch { a: f64, b: f64 },

    #[error("operation requires epsilon > 0")]
    EpsilonZero,

    #[error("non-finite values in {term} at t = {time}")]
    BlowUp { term: String, time: f64 },

    #[error("CFL limit forces dt = {dt:e} below min_dt = {min_dt:e}")]
    StepTooSmall { dt: f64, min_dt: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("states are not consecutive: {0}")]
    NonConsecutive(String),

    #[error("unknown initial-condition family `{0}`")]
    UnknownFamily(String),

    #[error("initial moisture must satisfy q_e <= 0, found max {0:e}")]
    PositiveMoisture(f64),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("checkpoint has bad magic bytes")]
    BadMagic,

    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u32),

    #[error("checkpoint CRC mismatch (stored {stored:08x}, computed {computed:08x})")]
    CrcMismatch { stored: u32, computed: u32 },

    #[error("checkpoint truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
