use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is outside its legal range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Every grid node has likelihood zero, so the posterior cannot be
    /// renormalized. Usually means the observed counts are impossible
    /// under the assumed model anywhere in the prior window.
    #[error("posterior update produced all-zero weights")]
    DegeneratePosterior,

    /// A matrix that must be invertible (Fisher information) was singular.
    #[error("singular information matrix")]
    SingularInformation,

    #[error("{0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
