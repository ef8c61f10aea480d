use thiserror::Error;

/// Errors raised by graph construction, form evaluation and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("spec error: {0}")]
    Spec(String),

    #[error("invariant violation: {0}")]
    Invariant(String),

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("tail error: {0}")]
    Tail(String),

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("solver diverged: {0}")]
    SolverDiverged(String),

    #[error("not transient: {0}")]
    NotTransient(String),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("not harmonic: {0}")]
    NotHarmonic(String),

    #[error("singular boundary system: {0}")]
    SingularLambdaSystem(String),

    #[error("infinite energy: {0}")]
    InfiniteEnergy(String),

    #[error("boundary form not admissible: {0}")]
    NotAdmissible(String),

    #[error("form not evaluable: {0}")]
    NotEvaluable(String),

    #[error("not in form domain: {0}")]
    NotInDomain(String),

    #[error("no stabilization: {0}")]
    NoStabilization(String),

    #[error("division by zero: {0}")]
    DivisionByZero(String),

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
