use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid simplex point: {0}")]
    InvalidSimplexPoint(String),

    #[error("invalid tangent vector: coordinates sum to {sum:e}, expected 0")]
    InvalidTangentVector { sum: f64 },

    #[error("nonpositive capitalization {value} at row {row}, column {col}")]
    NonpositiveCapitalization { row: usize, col: usize, value: f64 },

    #[error("empty market path")]
    EmptyPath,

    #[error("market path mixes dimensions: point {index} has {found} assets, expected {expected}")]
    MixedDimensions {
        index: usize,
        found: usize,
        expected: usize,
    },

    #[error("portfolio weights invalid at evaluation: {0}")]
    InvalidPortfolioWeights(String),

    #[error("portfolio ruined relative to market at time {time}: growth factor {factor:e}")]
    PortfolioRuin { time: usize, factor: f64 },

    #[error("curve touches the simplex boundary at vertex {index}")]
    CurveTouchesBoundary { index: usize },

    #[error("quadrature_steps must be >= 2 per segment, got {0}")]
    TooFewQuadratureSteps(usize),

    #[error("generating function not positive at sampled point (value {value:e})")]
    NonpositiveGenerator { value: f64 },

    #[error("generator not concave here: weight {weight:e} for asset {asset} outside [0, 1]")]
    GeneratorNotConcave { asset: usize, weight: f64 },

    #[error("finite-difference step underflow at distance {dist:e} from the boundary")]
    StepUnderflow { dist: f64 },

    #[error("nonpositive growth factor {factor:e}: q lies outside the solvency region relative to p")]
    NonpositiveGrowth { factor: f64 },

    #[error("L-divergence {value:e} below -1e-10; generator/portfolio pair is inconsistent")]
    NegativeDivergence { value: f64 },

    #[error("diversity parameter r={0} outside (0, 1)")]
    BadDiversityParameter(f64),

    #[error("cycle does not close: first/last points differ by {gap:e}")]
    CycleNotClosed { gap: f64 },

    #[error("function hit zero or below at grid point {index} (x={x})")]
    NonpositiveOnGrid { index: usize, x: f64 },

    #[error("grid too small: need at least {need} points, got {got}")]
    GridTooSmall { need: usize, got: usize },

    #[error("portfolio weight {value} outside [0, 1] at x={x}")]
    WeightOutOfRange { x: f64, value: f64 },

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("start point lies outside the region K")]
    StartOutsideRegion,

    #[error("nonpositive gross return {value} at row {row}, column {col}")]
    NonpositiveReturn { row: usize, col: usize, value: f64 },

    #[error("empty return history")]
    EmptyHistory,

    #[error("no jumps observed: every path has fewer than 2 points")]
    NoJumps,

    #[error("sampler left the simplex at step {step}: {reason}")]
    SamplerLeftSimplex { step: usize, reason: String },

    #[error("sample point off-grid: asset-1 weight {value} is {offset:e} from the nearest grid point (half-resolution {half_res:e})")]
    OffGridSample {
        value: f64,
        offset: f64,
        half_res: f64,
    },

    #[error("jump sample is empty")]
    EmptySample,

    #[error("infeasible problem: {0}")]
    Infeasible(String),

    #[error("objective undefined: log argument {value:e} <= 0 for {term} at sample record {record}")]
    ObjectiveUndefined {
        record: usize,
        term: String,
        value: f64,
    },

    #[error("instance too large for brute force: {0}")]
    InstanceTooLarge(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("csv format error at line {line}: {msg}")]
    CsvFormat { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
