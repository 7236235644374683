use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the geneo toolkit.
#[derive(Debug, Error)]
pub enum GeneoError {
    #[error("grid size must be at least {min}, got {got}")]
    GridTooSmall { got: usize, min: usize },

    #[error("grid mismatch: expected n = {expected}, got n = {got}")]
    GridMismatch { expected: usize, got: usize },

    #[error("signal has {got} values, grid of size {n} needs {expected}")]
    SignalLength { n: usize, expected: usize, got: usize },

    #[error("signal value at index {index} is not finite")]
    NonFiniteValue { index: usize },

    #[error("site ({i}, {j}) is outside an {n}x{n} grid")]
    SiteOutOfRange { i: usize, j: usize, n: usize },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("group enumeration needs {needed} elements, budget is {budget}")]
    GroupBudget { needed: usize, budget: usize },

    #[error("metric returned invalid distance {value} for pair ({a}, {b})")]
    InvalidDistance { a: usize, b: usize, value: f64 },

    #[error("epsilon must be positive, got {0}")]
    NonPositiveEpsilon(f64),

    #[error("invalid operator parameters: {0}")]
    InvalidOperator(String),

    #[error("convex combination weight {0} is outside [0, 1]")]
    InvalidMixWeight(f64),

    #[error("points {i} and {j} collide: squared distance {dist:e} is below guard {guard:e}")]
    Collision { i: usize, j: usize, dist: f64, guard: f64 },

    #[error("could not draw a collision-free configuration after {0} attempts")]
    PersistentCollision(usize),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("IDX: bad magic number: expected {expected:#010x}, found {found:#010x}")]
    IdxMagic { expected: u32, found: u32 },

    #[error("IDX: payload truncated: header declares {expected} bytes, found {found}")]
    IdxTruncated { expected: usize, found: usize },

    #[error("IDX: {0}")]
    IdxFormat(String),

    #[error("missing letter classes: {0}")]
    MissingClasses(String),

    #[error("frequency table: {0}")]
    Frequency(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl GeneoError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        GeneoError::Io { path: path.into(), source }
    }
}

pub type Result<T, E = GeneoError> = std::result::Result<T, E>;
