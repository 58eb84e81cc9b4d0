use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid rect [{x0}, {y0}, {x1}, {y1}]: need 0 <= x0 < x1 <= 1 and 0 <= y0 < y1 <= 1")]
    InvalidRect { x0: f64, y0: f64, x1: f64, y1: f64 },

    #[error("invalid grid box ({row0}, {col0}, {row1}, {col1}) for a {rows}x{cols} grid")]
    InvalidGridBox {
        row0: usize,
        col0: usize,
        row1: usize,
        col1: usize,
        rows: usize,
        cols: usize,
    },

    #[error("cell ({row}, {col}) lies outside a {rows}x{cols} grid")]
    CellOutOfBounds {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },

    #[error("no activated cells")]
    EmptyActivation,

    #[error("alpha must be positive, got {0}")]
    InvalidAlpha(f64),

    #[error("invalid value for `{key}`: {reason}")]
    InvalidConfig { key: String, reason: String },

    #[error("unknown key `{0}`")]
    UnknownKey(String),

    #[error("invalid heatmap: {0}")]
    InvalidHeatmap(String),

    #[error("channel shape mismatch: expected {expected_rows}x{expected_cols}, got {rows}x{cols}")]
    ShapeMismatch {
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },

    #[error("empty feature stack")]
    EmptyStack,

    #[error("empty pair stream")]
    EmptyStream,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),
}

impl Error {
    pub(crate) fn config(key: &str, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            key: key.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    /// True for errors that indicate a broken internal invariant rather than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::InvariantViolation(_))
    }
}
