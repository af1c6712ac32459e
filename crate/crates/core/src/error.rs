use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the regression math, the private testers and data ingestion.
#[derive(Debug, Error)]
#[non_exhaustive]
pub enum Error {
    #[error("design matrix is singular: x has no spread")]
    SingularDesign,

    #[error("residual variance is zero; the F statistic is undefined")]
    ZeroVariance,

    #[error("sample variance of x is negative ({0})")]
    NegativeVariance(f64),

    #[error("residual term of the reformulated statistic is not positive")]
    NonpositiveDenominator,

    /// A private variance estimate came out non-positive after noising.
    #[error("private variance estimate is not positive")]
    NonpositiveVariancePiece,

    #[error("invalid clip bounds: lo {lo} > hi {hi}")]
    InvalidBounds { lo: f64, hi: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),

    #[error("tester `{tester}` needs grouped data")]
    NeedsGroups { tester: String },

    #[error("insufficient samples: got {got}, need at least {min}")]
    InsufficientSamples { got: usize, min: usize },

    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("column `{column}` has more than two group labels")]
    MoreThanTwoGroups { column: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
