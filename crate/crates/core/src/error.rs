use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("matrix must have at least one row and one column")]
    EmptyMatrix,

    #[error("row {row} is zero but the right-hand side is {rhs}; the system is inconsistent")]
    ZeroRowInconsistent { row: usize, rhs: f64 },

    #[error("dual iterate is not an admissible subgradient for the primal iterate ({0})")]
    InadmissibleDual(String),

    #[error("search direction is the zero vector")]
    ZeroDirection,

    #[error("all residuals are zero; the system is already solved")]
    AllZeroResiduals,

    #[error("invalid weight exponent p = {0}; must be finite and positive")]
    InvalidExponent(f64),

    #[error("iterate became non-finite at iteration {iteration}")]
    NonFiniteIterate { iteration: usize },

    #[error("zero vector has no defined norm ratio")]
    ZeroVector,

    #[error("matrix is zero")]
    ZeroMatrix,

    #[error("{n} columns exceed the exhaustive subset enumeration limit of {limit}")]
    TooManyColumns { n: usize, limit: usize },

    #[error("rows are not normalized to unit 2-norm (row {row} has norm {norm})")]
    NotNormalized { row: usize, norm: f64 },

    #[error("contraction factor q = {0} is not in (0, 1)")]
    DegenerateQ(f64),

    #[error("oracle did not converge after {iterations} iterations (gradient norm {grad_norm:e})")]
    NotConverged { iterations: usize, grad_norm: f64 },

    #[error("invalid sparsity {sparsity} for n = {n}")]
    InvalidSparsity { sparsity: usize, n: usize },

    #[error("ground truth vector is zero or missing")]
    MissingGroundTruth,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unsupported Matrix Market qualifier `{0}`")]
    UnsupportedField(String),

    #[error("entry ({row}, {col}) lies outside a {nrows}x{ncols} matrix (line {line})")]
    IndexOutOfBounds {
        row: usize,
        col: usize,
        nrows: usize,
        ncols: usize,
        line: usize,
    },

    #[error("matrix of {nrows}x{ncols} exceeds the dense size limit of {limit} entries")]
    TooLarge {
        nrows: usize,
        ncols: usize,
        limit: usize,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }
}
