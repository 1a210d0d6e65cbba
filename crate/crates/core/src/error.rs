use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("iteration diverged at step {step}: {what} is not finite")]
    Divergence { step: usize, what: &'static str },

    #[error("problem too large: {0}")]
    Size(String),

    #[error("refinement level {level} ({value}) did not converge within {steps} steps")]
    Study { level: usize, value: f64, steps: usize },

    #[error("malformed grid function file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
