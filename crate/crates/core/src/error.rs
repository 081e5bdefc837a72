use thiserror::Error;

use crate::spectrum::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("spectrum has zero norm")]
    ZeroSpectrum,
    #[error("non-finite value at channel {channel}")]
    NonFinite { channel: usize },
    #[error("grid needs at least 2 channels, got {0}")]
    GridTooSmall(usize),
    #[error("grid start and end ppm coincide ({0})")]
    DegenerateGrid(f64),
    #[error("ppm window [{lo}, {hi}] lies outside the source window [{src_lo}, {src_hi}]")]
    WindowOutOfRange { lo: f64, hi: f64, src_lo: f64, src_hi: f64 },
    #[error("GridMismatch: spectrum grid does not match the expected grid")]
    GridMismatch,
    #[error("expected {expected} values, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("library is empty")]
    EmptyLibrary,
    #[error("library is invalid: {}", format_violations(.0))]
    InvalidLibrary(Vec<Violation>),
    #[error("threshold must be positive, got {0}")]
    NonPositiveThreshold(f64),
    #[error("bin {bin} out of range for {n_bins} bins")]
    BinOutOfRange { bin: usize, n_bins: usize },
    #[error("vector has zero variance")]
    ZeroVariance,
    #[error("correlation of vectors {i} and {j}: {source}")]
    PairFailed {
        i: usize,
        j: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("sample set is empty")]
    EmptySamples,
    #[error("all samples are identical; histogram range is degenerate")]
    DegenerateRange,
    #[error("target {0} is not one-hot")]
    NonOneHotTarget(usize),
    #[error("t = {0} is outside [0, 1]")]
    TOutOfRange(f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unsupported format version {found} (expected {expected})")]
    FormatVersion { found: u32, expected: u32 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}
