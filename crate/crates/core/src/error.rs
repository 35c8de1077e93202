use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain has {faces} faces, exceeding the enumeration cap of {cap}")]
    DomainTooLarge { faces: usize, cap: usize },

    #[error("boundary condition does not cover the exterior ring: {0}")]
    BoundaryCoverage(String),

    #[error("parameter out of domain: {0}")]
    Parameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
