use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension {dim}: {reason}")]
    InvalidDimension { dim: usize, reason: &'static str },

    #[error("basis dimension {dim} is below the recommended {recommended} for this operator")]
    Truncation { dim: usize, recommended: usize },

    #[error("squeeze pair violates |v|^2 - |u|^2 = 1 (defect {defect:e})")]
    InvalidPair { defect: f64 },

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("{what} did not converge (residual {residual:e})")]
    NonConvergence { what: &'static str, residual: f64 },

    #[error("squeezing is undefined on the unstable (saddle) branch")]
    UnsupportedBranch,

    #[error("displacement and squeeze pair do not satisfy the steady conditions (residual {residual:e})")]
    InconsistentFrame { residual: f64 },

    #[error("unperturbed levels {a} and {b} are degenerate (gap {gap:e})")]
    Degenerate { a: usize, b: usize, gap: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("steady state is not unique")]
    NonUniqueSteadyState,

    #[error("step size underflow at t = {t:e}; problem appears stiff")]
    Stiff { t: f64 },

    #[error("rate matrix is reducible: level {0} is disconnected")]
    Reducible(usize),

    #[error("perturbation order {requested} was not computed (maximum {available})")]
    MissingOrder { requested: usize, available: usize },

    #[error("extraction undefined: requires p1 > p2 > 0")]
    UndefinedExtraction,

    #[error("dephasing channel requires kappa > 0")]
    DegenerateLimit,

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
