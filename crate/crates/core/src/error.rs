use thiserror::Error;

/// Errors raised while building chains or evaluating oracles and bounds.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("row {row} of the transition matrix sums to {sum}, not 1")]
    NonStochastic { row: usize, sum: f64 },

    #[error("transition matrix entry ({row}, {col}) = {value} is negative or not finite")]
    InvalidEntry { row: usize, col: usize, value: f64 },

    #[error("pi is not stationary: (pi A)_{coord} differs from pi_{coord} by {residual:e}")]
    NotStationary { coord: usize, residual: f64 },

    #[error("state {state} has non-positive stationary mass {mass}")]
    ZeroMassState { state: usize, mass: f64 },

    #[error("probability vector sums to {sum}, not 1")]
    NotNormalized { sum: f64 },

    #[error("chain is reducible: the stationary law is not unique or not fully supported")]
    Reducible,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("parameter out of range: {0}")]
    ParamOutOfRange(String),

    #[error("invalid observable: {0}")]
    InvalidObservable(String),

    #[error("observable is not centered: E[f(W_1)] = {mean:e}")]
    NotCentered { mean: f64 },

    #[error("observable values do not lie on an arithmetic lattice")]
    NotLattice,

    #[error("exponent q = {0} is not an even integer; use the lattice distribution or Monte Carlo")]
    OddExponent(f64),

    #[error("{what} needs {needed} units of work, budget is {cap}")]
    BudgetExceeded { what: &'static str, needed: f64, cap: f64 },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("spectral gap is closed: lambda = {0} >= 1")]
    GapClosed(f64),

    #[error("DomainViolated: a = {a} exceeds sqrt(q/((1-lambda)n)) = {edge}")]
    DomainViolated { a: f64, edge: f64 },

    #[error("regime unsupported: q = {q} < p = {p} (requires q >= p >= 2)")]
    RegimeUnsupported { p: f64, q: f64 },

    #[error("chain file: {0}")]
    ChainFile(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
