use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count {n} outside supported range {min}..={max}")]
    QubitCountOutOfRange { n: usize, min: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("state vector norm deviates from 1 by {0:.3e}")]
    NotNormalized(f64),

    #[error("matrix deviates from Hermiticity by {0:.3e}")]
    NotHermitian(f64),

    #[error("trace deviates from 1 by {0:.3e}")]
    TraceNotUnit(f64),

    #[error("matrix has eigenvalue {0:.3e} below the physicality floor")]
    NotPositive(f64),

    #[error("matrix deviates from unitarity by {0:.3e}")]
    NotUnitary(f64),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unphysical parameters: {0}")]
    UnphysicalParameters(String),

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("incomplete dataset: {0}")]
    IncompleteDataset(String),

    #[error("readout correction failed: {0}")]
    CorrectionFailed(String),

    #[error("fit did not converge: {0}")]
    FitFailed(String),

    #[error("degenerate error budget: all derivatives vanish")]
    DegenerateBudget,

    #[error("malformed dataset file: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
