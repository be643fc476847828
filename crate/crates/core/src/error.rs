use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SzegoError {
    #[error("spectrum must contain at least one coefficient")]
    EmptySpectrum,
    #[error("non-finite coefficient at frequency {0}")]
    NonFinite(usize),
    #[error("invalid parameter {name}: {detail}")]
    InvalidParameter { name: &'static str, detail: String },
    #[error("step size underflow at t = {t} (h = {h})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("quadrature did not converge: value {value}, error estimate {error}")]
    QuadratureFailure { value: f64, error: f64 },
    #[error("trajectory has no phase track")]
    MissingPhase,
    #[error("time {t} exceeds the paralinear window {window}")]
    OutsideWindow { t: f64, window: f64 },
}

pub type Result<T> = std::result::Result<T, SzegoError>;

pub(crate) fn invalid(name: &'static str, detail: impl Into<String>) -> SzegoError {
    SzegoError::InvalidParameter {
        name,
        detail: detail.into(),
    }
}
