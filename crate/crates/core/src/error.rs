use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("not a Nash equilibrium: {0}")]
    NotNash(String),
    #[error("Nash equilibrium is not quasi-strict: {0}; use is_extreme for a general extremality test")]
    NotQuasiStrict(String),
    #[error("not a correlated equilibrium: {0}")]
    NotCorrelated(String),
    #[error("direction is not in the tangent space: {0}")]
    NotTangent(String),
    #[error("no strategically equivalent perturbation pairs with tau: every one-agent-deleted marginal vanishes, so tau lies in the zero-marginal space")]
    ZeroMarginal,
    #[error("distribution is not exchangeable: swapping agents {0} and {1} changes it")]
    NotExchangeable(usize, usize),
    #[error("game is not symmetric")]
    NotSymmetric,
    #[error("certificate failed: {0}")]
    Certificate(String),
    #[error("linear program {0}")]
    Lp(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
