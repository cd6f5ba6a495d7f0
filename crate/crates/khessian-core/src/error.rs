use core::fmt;

/// Errors from the algebraic layer.
#[derive(Debug, Clone, PartialEq)]
pub enum CoreError {
    /// Symmetric-function order outside `1..=n`.
    OrderOutOfRange { k: usize, n: usize },
    /// Spectrum is empty or carries a non-finite entry.
    InvalidSpectrum,
    /// The spectrum lies outside the Gårding cone required by the operation.
    OutsideCone { k: usize },
    /// `σ_k < 0`, so the k-th root is undefined.
    NegativeSigma { k: usize, value: f64 },
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::OrderOutOfRange { k, n } => {
                write!(f, "order k={k} out of range for spectrum of length {n}")
            }
            CoreError::InvalidSpectrum => write!(f, "spectrum must be non-empty and finite"),
            CoreError::OutsideCone { k } => {
                write!(f, "spectrum lies outside the cone Gamma_{k}")
            }
            CoreError::NegativeSigma { k, value } => {
                write!(f, "sigma_{k} = {value} is negative; k-th root undefined")
            }
        }
    }
}

impl core::error::Error for CoreError {}
