use thiserror::Error;

pub type Result<T> = std::result::Result<T, StrumerError>;

#[derive(Debug, Error)]
pub enum StrumerError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A non-finite or exploding iterate; `update` names the ADMM step that produced it.
    #[error("numerical divergence in {update} at iteration {iteration}")]
    Divergence {
        update: &'static str,
        iteration: usize,
    },

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl StrumerError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        StrumerError::InvalidInput(msg.into())
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        StrumerError::Dimension(msg.into())
    }

    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            StrumerError::Divergence { .. } | StrumerError::Eigen(_) | StrumerError::Singular(_)
        )
    }
}
