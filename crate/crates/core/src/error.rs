use thiserror::Error;

/// Errors raised by the analysis and simulation routines.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch for {name}: expected {expected}, got {actual}")]
    Dimension { name: String, expected: String, actual: String },

    #[error("root bracket exhausted in [{lo}, {hi}] after {found} of {wanted} roots")]
    BracketExhausted { lo: f64, hi: f64, found: usize, wanted: usize },

    #[error("no positive eigenvalue among the {0} basis modes")]
    NoPositiveEigenvalue(usize),

    #[error("eigenvalue magnitude {magnitude:e} lies in the ambiguity band around the cluster tolerance {tol:e}; pass an explicit tolerance")]
    ClusterAmbiguity { magnitude: f64, tol: f64 },

    #[error("transformation is ill-conditioned (condition number {0:e})")]
    IllConditioned(f64),

    #[error("matrix is not numerically nilpotent (rank stalls at {0})")]
    NotNilpotent(usize),

    #[error("pencil is not regular")]
    IrregularPencil,

    #[error("mode {mode} pencil irregular")]
    IrregularMode { mode: usize },

    #[error("initial condition is inconsistent (residual {0:e})")]
    InconsistentInitial(f64),

    #[error("time grid must be ascending")]
    TimeGrid,

    #[error("matrix exponential argument too large (norm {0:e}); rescale time or split the interval")]
    ExpmOverflow(f64),

    #[error("Lyapunov equation is singular: eigenvalue pair sums to {0:e}")]
    SingularLyapunov(f64),

    #[error("non-scalar pencil: A is not a multiple of the identity")]
    NonScalarPencil,

    #[error("unsupported boundary condition: {0}")]
    UnsupportedBoundary(String),

    #[error("no positive equilibrium: k2 = {0} must exceed 1")]
    NoPositiveEquilibrium(f64),

    #[error("Newton iteration failed to converge at t = {t} (update norm {update:e})")]
    NewtonFailure { t: f64, update: f64 },

    #[error("singular matrix encountered in {0}")]
    Singular(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
