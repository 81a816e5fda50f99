use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Errors raised by the core algorithms.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// Matrix or vector shapes do not line up.
    DimensionMismatch { expected: usize, found: usize },
    /// Parameter tensors passed to the optimizer do not match the model.
    ShapeMismatch,
    EmptySeries,
    /// A value is NaN or infinite.
    NonFinite { row: usize, col: usize },
    /// Change points must be strictly increasing and inside `[0, T)`.
    InvalidChangePoints(String),
    InvalidSplit(String),
    SplitTooSmall { part: &'static str, len: usize },
    SeriesTooShort { len: usize, window: usize },
    EmptyPairSet,
    InvalidBatchSize,
    /// Every pairwise distance is zero, so no bandwidth can be derived.
    DegeneratePointSet,
    InvalidKernel(String),
    InvalidConfig(String),
    EmptyTrainingSet,
    UntrainedModel,
    ChannelMismatch { expected: usize, found: usize },
    InvalidWidth(usize),
    EmptyScores,
    InvalidRatio,
    NoPositives,
    NoNegatives,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::ShapeMismatch => f.write_str("gradient shapes do not match the model"),
            Error::EmptySeries => f.write_str("time series has no rows"),
            Error::NonFinite { row, col } => {
                write!(f, "non-finite value at row {row}, column {col}")
            }
            Error::InvalidChangePoints(msg) => write!(f, "invalid change points: {msg}"),
            Error::InvalidSplit(msg) => write!(f, "invalid split: {msg}"),
            Error::SplitTooSmall { part, len } => {
                write!(f, "{part} split is too small ({len} timesteps)")
            }
            Error::SeriesTooShort { len, window } => write!(
                f,
                "series of length {len} is too short for window {window} (need at least {})",
                2 * window
            ),
            Error::EmptyPairSet => f.write_str("no segment pairs to sample from"),
            Error::InvalidBatchSize => f.write_str("batch size must be at least 1"),
            Error::DegeneratePointSet => {
                f.write_str("median pairwise distance is zero; cannot pick a bandwidth")
            }
            Error::InvalidKernel(msg) => write!(f, "invalid kernel: {msg}"),
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::EmptyTrainingSet => f.write_str("training set is empty"),
            Error::UntrainedModel => f.write_str("model has no frozen bandwidth; train it first"),
            Error::ChannelMismatch { expected, found } => {
                write!(f, "model expects {expected} channels, series has {found}")
            }
            Error::InvalidWidth(w) => write!(f, "smoothing width must be odd and >= 1, got {w}"),
            Error::EmptyScores => f.write_str("score series is empty"),
            Error::InvalidRatio => f.write_str("threshold ratio must lie in (0, 1]"),
            Error::NoPositives => f.write_str("no positive boundaries; AUC is undefined"),
            Error::NoNegatives => f.write_str("no negative boundaries; AUC is undefined"),
        }
    }
}

impl core::error::Error for Error {}
