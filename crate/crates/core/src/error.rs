use thiserror::Error;

/// Errors raised while constructing Hamiltonians, problems and solver inputs.
///
/// Solver non-convergence is not an error: it is reported through
/// [`SolveReport::converged`](crate::SolveReport).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown Hamiltonian family `{0}`")]
    UnknownFamily(String),

    #[error("malformed parameters for `{family}`: {reason}")]
    MalformedParams { family: String, reason: String },

    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { name: String, pos: usize },

    #[error("function `{name}` expects {expected} argument(s), got {got}")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
    },

    #[error("not coercive at this level: H stays below {level} up to |p| = {cap}")]
    NotCoercive { level: f64, cap: f64 },

    #[error("Hamiltonian is not finite at p = {p}, x = {x}")]
    NotFinite { p: f64, x: f64 },

    #[error("flux limiter requires quasiconvex H (found {0} minima)")]
    NotQuasiconvex(usize),

    #[error("resolution too coarse: {0}")]
    ResolutionTooCoarse(String),

    #[error("invalid edge: {0}")]
    InvalidEdge(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("invalid fattened domain: {0}")]
    InvalidDomain(String),

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
