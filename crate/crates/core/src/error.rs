use thiserror::Error;

/// Errors produced by the forecasting library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("series too short: need at least {needed} observations, have {available}")]
    SeriesTooShort { needed: usize, available: usize },

    #[error("series still contains gaps at {count} positions")]
    GapsPresent { count: usize },

    #[error("gap at index {index} has no valid donor value")]
    UnrepairableGap { index: usize },

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("series has zero variance")]
    ZeroVariance,

    #[error("calendar anchor missing: {0}")]
    CalendarMissing(String),

    #[error("invalid lag set: {0}")]
    InvalidLags(String),

    #[error("too few points: need at least {needed}, have {available}")]
    TooFewPoints { needed: usize, available: usize },

    #[error("insufficient neighbors: Kmax = {kmax} but dataset has {available} points")]
    InsufficientNeighbors { kmax: usize, available: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("block size {block} does not divide horizon {horizon}")]
    InvalidBlockSize { block: usize, horizon: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("origin out of range: start {start} + {steps} steps exceeds series length {len}")]
    OriginOutOfRange { start: usize, steps: usize, len: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("expected {expected} p-values, got {got}")]
    InvalidPValueCount { expected: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
