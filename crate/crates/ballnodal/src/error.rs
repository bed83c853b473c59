use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("coincident points: |x - y| = {0:e}")]
    Singular(f64),

    #[error("quadrature error estimate {estimate:e} exceeds tolerance {tol:e}")]
    Quadrature { estimate: f64, tol: f64 },

    #[error("bracket failure: {0}")]
    Bracket(String),

    #[error("degenerate critical point at rho = {rho}: min |eig| = {min_abs:e}, max |eig| = {max_abs:e}")]
    Degenerate {
        rho: f64,
        min_abs: f64,
        max_abs: f64,
    },

    #[error("boundary classification undecided at rho = {rho}: m = {m:e}, M = {big_m:e}")]
    Ambiguous { rho: f64, m: f64, big_m: f64 },

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: String, got: String },

    #[error(
        "Newton did not converge after {iterations} iterations (residual history {history:?})"
    )]
    NonConvergence {
        iterations: usize,
        history: Vec<f64>,
    },

    #[error("solution lost its sign structure: {sign_changes} sign changes along the axis")]
    SignStructureLost { sign_changes: usize },

    #[error("diagnostic extraction failed: {0}")]
    Extraction(String),

    #[error("continuation failed at ladder index {index} (epsilon = {epsilon}): {source}")]
    Ladder {
        index: usize,
        epsilon: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("linear solver failure: {0}")]
    Linear(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
