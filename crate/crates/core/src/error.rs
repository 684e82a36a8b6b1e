use thiserror::Error;

/// Errors raised by state construction, frame solves and updates.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semi-definite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("trace is not 1 (got {0})")]
    BadTrace(f64),

    #[error("vector is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("effect spectrum [{min}, {max}] leaves [0, 1]")]
    SpectrumOutOfRange { min: f64, max: f64 },

    #[error("operators do not resolve the identity (max deviation {0:e})")]
    NotComplete(f64),

    #[error("outcome has zero probability ({0:e})")]
    ZeroProbabilityOutcome(f64),

    #[error("Bayesian evidence vanishes ({0:e})")]
    ZeroEvidence(f64),

    #[error("invalid classical state: {0}")]
    InvalidClassicalState(String),

    #[error("tabulated effect evaluated against a different atom set")]
    AtomSetMismatch,

    #[error("observable carries no outcome values")]
    MissingOutcomeValues,

    #[error("Gram matrix is singular (condition number {0:e})")]
    GramSingular(f64),

    #[error("reconstruction is not a state (min eigenvalue {min_eigenvalue:e}, trace {trace})")]
    NotAState { min_eigenvalue: f64, trace: f64 },

    #[error("no well-conditioned frame after {0} attempts")]
    FrameDegenerate(usize),

    #[error("{atoms} atoms cannot decompose a rank-{rank} state")]
    InsufficientAtoms { atoms: usize, rank: usize },

    #[error("i/o failure: {0}")]
    Io(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
