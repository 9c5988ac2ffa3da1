use thiserror::Error;

/// Errors raised by model construction and simulation entry points.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum WetError {
    #[error("{name} must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },
    #[error("{name} must be non-negative, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("device index {index} out of range for {count} devices")]
    DeviceIndex { index: usize, count: usize },
    #[error("{0} requires exactly one power beacon")]
    SinglePbOnly(&'static str),
    #[error("{0} requires at least two power beacons")]
    MultiPbRequired(&'static str),
    #[error("precoder power {norm_sq} exceeds budget {budget}")]
    PowerBudget { norm_sq: f64, budget: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, WetError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> WetError {
    WetError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn check_finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(WetError::NonFinite { name, value })
    }
}

pub(crate) fn check_non_negative(name: &'static str, value: f64) -> Result<f64> {
    check_finite(name, value)?;
    if value < 0.0 {
        Err(WetError::Negative { name, value })
    } else {
        Ok(value)
    }
}
