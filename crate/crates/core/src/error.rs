use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("power error: {0}")]
    Power(String),

    #[error("negative parameter `{field}`: {value}")]
    NegativeParameter { field: &'static str, value: f64 },

    #[error("ridge parameter must be strictly positive (lambda > 0), got {0}")]
    LambdaZero(f64),

    #[error("linear solve failed: {0}")]
    Solve(String),

    #[error("singular value decomposition did not converge")]
    Convergence,

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    /// True for errors caused by invalid user input rather than a numerical failure.
    pub fn is_config(&self) -> bool {
        !matches!(self, Error::Solve(_) | Error::Convergence)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
