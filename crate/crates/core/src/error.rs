use thiserror::Error;

/// Errors produced by kernel synthesis, estimation and deblurring.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DeblurError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The least-squares design matrix is numerically rank deficient.
    #[error("ill-conditioned inverse fit (condition estimate {condition:.3e})")]
    IllConditionedFit { condition: f64 },

    /// Too few radial bins survived the denominator floor.
    #[error("insufficient spectral band: {valid} valid bins, need at least {required}")]
    InsufficientBand { valid: usize, required: usize },

    /// The ratio-spectrum optimizer did not converge; carries its best iterate.
    #[error("blur model fit failed to converge (best alpha {alpha:.4}, c' {noise_coeff:.4e}, residual {residual:.4e})")]
    FitFailed {
        alpha: f64,
        noise_coeff: f64,
        residual: f64,
    },
}

pub type Result<T> = std::result::Result<T, DeblurError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(DeblurError::InvalidArgument(msg.into()))
}
