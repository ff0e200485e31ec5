use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {block}: expected {expected}, found {found}")]
    DimensionMismatch {
        block: String,
        expected: String,
        found: String,
    },

    #[error("non-finite entry in {0}")]
    NonFinite(String),

    #[error("feedback interconnection is ill-posed (I - D22 DK singular or badly conditioned, norm {0:e})")]
    IllPosed(f64),

    #[error("sI - A is numerically singular at the requested point")]
    SingularResolvent,

    #[error("eigenvalue solver did not converge")]
    EigenFailure,

    #[error("singular value decomposition did not converge")]
    SvdFailure,

    #[error("system is not asymptotically stable (spectral abscissa {0:e})")]
    UnstableSystem(f64),

    #[error("norm iteration stalled: bracket [{lower:e}, {upper:e}] at omega {omega:e}")]
    ToleranceNotMet { lower: f64, upper: f64, omega: f64 },

    #[error("parameter vector has length {found}, expected {expected}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("objective is infinite at the starting point")]
    InfeasibleStart,

    #[error("objective is infinite at every starting point")]
    AllStartsInfeasible,

    #[error("no stabilizing controller found (best spectral abscissa {0:e})")]
    NoStabilizingController(f64),

    #[error("controller does not stabilize the closed loop (spectral abscissa {0:e})")]
    NotStabilizing(f64),

    #[error("invalid option: {0}")]
    InvalidOption(String),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub(crate) fn dims(block: &str, expected: (usize, usize), found: (usize, usize)) -> Self {
        Error::DimensionMismatch {
            block: block.to_string(),
            expected: format!("{}x{}", expected.0, expected.1),
            found: format!("{}x{}", found.0, found.1),
        }
    }
}
