use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("non-uniform spacing between rows {row} and {next}: {detail}")]
    NonUniformSpacing {
        row: usize,
        next: usize,
        detail: String,
    },
    #[error("non-numeric value {value:?} at row {row}")]
    NonNumericValue { row: usize, value: String },
    #[error("empty value at row {row}")]
    MissingValue { row: usize },
    #[error("unparseable date {value:?} at row {row} (expected ISO-8601 YYYY-MM-DD)")]
    InvalidDate { row: usize, value: String },
    #[error("series overlap has {found} points, need at least {min}")]
    InsufficientOverlap { found: usize, min: usize },
    #[error("series too short: {len} points, need at least {min}")]
    SeriesTooShort { len: usize, min: usize },
    #[error("series contains a non-finite value at index {0}")]
    NonFinite(usize),
    #[error("invalid scale grid: {0}")]
    InvalidGrid(String),
    #[error("wavelet fields do not share grid, length and sampling interval")]
    GridMismatch,
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("coherence magnitude {value} exceeds 1 at scale row {row}, time {col}")]
    NumericalBlowup { value: f64, row: usize, col: usize },
    #[error("smoothed wavelet power vanishes at scale row {row}, time {col}")]
    ZeroPower { row: usize, col: usize },
    #[error("phase {0} lies outside [-pi, pi]")]
    OutOfRange(f64),
    #[error("series is constant")]
    DegenerateSeries,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown wavelet filter `{0}` (expected haar, d4 or la8)")]
    UnknownFilter(String),
    #[error("series of length {len} is shorter than the filter width {width}")]
    SeriesShorterThanFilter { len: usize, width: usize },
    #[error("decomposition depth {levels} is not supported for {len} samples")]
    LevelTooDeep { levels: usize, len: usize },
    #[error("all wavelet coefficients are zero")]
    ZeroEnergy,
    #[error("energy distributions have different level counts: {0} vs {1}")]
    IncompatibleLevels(usize, usize),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
