use thiserror::Error;

/// Errors raised by the numerical core, the game/strategy model and the file formats.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(
        "matrix is not Hermitian: asymmetry {asymmetry:.3e} exceeds tolerance {tolerance:.3e}"
    )]
    AsymmetryExceedsTolerance { asymmetry: f64, tolerance: f64 },

    #[error("{0} did not converge")]
    ConvergenceFailure(&'static str),

    #[error(
        "rank mismatch: projector has rank {projector_rank} but basis has {basis_columns} columns"
    )]
    RankMismatch {
        projector_rank: usize,
        basis_columns: usize,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("state is not normalized: tau(sigma^2) = {value:.12}")]
    NotNormalized { value: f64 },

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),

    #[error("invalid correlation: {0}")]
    InvalidCorrelation(String),

    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("game is not synchronous")]
    NotSynchronousGame,

    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),

    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),

    #[error("graph has no vertices")]
    EmptyGraph,

    #[error("correlation entry has imaginary residue {residue:.3e}")]
    NonRealCorrelation { residue: f64 },

    #[error("orthogonalization bound violated: error {error:.6e} > 9 * eps = {bound:.6e}")]
    BoundViolated { error: f64, bound: f64 },

    #[error("B is not dominated by A (min eigenvalue of A - B is {min_eigenvalue:.3e})")]
    DominationViolated { min_eigenvalue: f64 },

    #[error("aggregated family is not a POVM: {0}")]
    NotPovm(String),

    #[error("invalid soundness instance: {0}")]
    InvalidInstance(String),

    #[error("schema version mismatch: expected {expected}, found {found}")]
    SchemaVersionMismatch { expected: u32, found: u32 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl Error {
    /// Process exit code: 2 for unreadable input, 3 for input that parses but
    /// fails validation, 4 when a mathematical contract is violated.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) | Error::SchemaVersionMismatch { .. } | Error::Io(_) => 2,
            Error::InvalidPovm(_)
            | Error::InvalidStrategy(_)
            | Error::InvalidCorrelation(_)
            | Error::InvalidGame(_)
            | Error::NotSynchronousGame
            | Error::AlphabetMismatch(_)
            | Error::InvalidProbability(_)
            | Error::EmptyGraph
            | Error::InvalidInstance(_)
            | Error::InvalidConfig(_)
            | Error::DimensionMismatch { .. } => 3,
            Error::AsymmetryExceedsTolerance { .. }
            | Error::ConvergenceFailure(_)
            | Error::RankMismatch { .. }
            | Error::NotPositive { .. }
            | Error::NotNormalized { .. }
            | Error::NonRealCorrelation { .. }
            | Error::BoundViolated { .. }
            | Error::DominationViolated { .. }
            | Error::NotPovm(_) => 4,
        }
    }
}
