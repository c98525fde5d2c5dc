use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("pole at {0}")]
    Pole(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("parity error: {0}")]
    Parity(String),
    #[error("parameter pole: {0}")]
    ParameterPole(String),
    #[error("series does not converge: {0}")]
    NonConvergence(String),
    #[error("arguments not coprime: {0}")]
    NotCoprime(String),
    #[error("outside validity regime: {0}")]
    Regime(String),
    #[error("insufficient points: {0}")]
    InsufficientPoints(String),
    #[error("ill-conditioned system (condition number {0:e})")]
    IllConditioned(f64),
    #[error("repeated Hecke eigenvalue at weight {0}")]
    EigenvalueCollision(u32),
    #[error("truncation insufficient: {0}")]
    TruncationInsufficient(String),
    #[error("empty support: {0}")]
    EmptySupport(String),
    #[error("mollifier length M={0} is an integer")]
    IntegerM(f64),
    #[error("cap exceeded: {0}")]
    CapExceeded(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
