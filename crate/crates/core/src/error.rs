use thiserror::Error;

/// Errors produced by map generation, evaluation, remapping and file I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {field}: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("rotation sends the ray to infinity (|w| = {w:e})")]
    RotationToInfinity { w: f64 },

    #[error("degenerate rational distortion denominator ({denominator:e})")]
    DegenerateDistortion { denominator: f64 },

    #[error("fixed-point division by zero")]
    DivisionByZero,

    #[error("at output pixel ({u}, {v}): {source}")]
    AtPixel {
        u: usize,
        v: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{cell}: {source}")]
    InCell {
        cell: String,
        #[source]
        source: Box<Error>,
    },

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("sampling factor {n} is too coarse: the {grid_w}x{grid_h} grid needs a pitch 2^n below both image dimensions")]
    GridTooSmall { n: u32, grid_w: usize, grid_h: usize },

    #[error("pixel ({u}, {v}) outside the {width}x{height} map")]
    OutOfRange {
        u: f64,
        v: f64,
        width: usize,
        height: usize,
    },

    #[error("buffer underflow at output pixel ({u}, {v}): source row {row} not written yet")]
    BufferUnderflow { u: usize, v: usize, row: i64 },

    #[error("buffer overwritten at output pixel ({u}, {v}): source row {row} already evicted")]
    BufferOverwritten { u: usize, v: usize, row: i64 },

    #[error("malformed {kind} data: {reason}")]
    Format { kind: &'static str, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("config parse error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn at_pixel(self, u: usize, v: usize) -> Self {
        Error::AtPixel {
            u,
            v,
            source: Box::new(self),
        }
    }

    pub(crate) fn format(kind: &'static str, reason: impl Into<String>) -> Self {
        Error::Format {
            kind,
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad inputs rather than by evaluation.
    pub fn is_validation(&self) -> bool {
        if let Error::AtPixel { source, .. } | Error::InCell { source, .. } = self {
            return source.is_validation();
        }
        matches!(
            self,
            Error::InvalidConfig { .. }
                | Error::InvalidParameter(_)
                | Error::DimensionMismatch { .. }
                | Error::GridTooSmall { .. }
                | Error::Format { .. }
                | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
