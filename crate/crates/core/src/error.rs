use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("fixed-point overflow: |{value}| exceeds representable magnitude 2^{max_pow}")]
    Overflow { value: f64, max_pow: i32 },

    #[error("invalid fixed-point config: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("correlated randomness exhausted: needed {needed} {kind}, store has {available} and on-demand generation is disabled")]
    RandomnessExhausted {
        kind: &'static str,
        needed: usize,
        available: usize,
    },

    #[error("transport failure: {0}")]
    Transport(String),

    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("ill-conditioned system: {0}")]
    IllConditioned(String),

    #[error("singular normal matrix: pivot {pivot} vanishes at column {col}")]
    SingularMatrix { col: usize, pivot: f64 },

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("experiment config rejected: {0}")]
    Experiment(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
